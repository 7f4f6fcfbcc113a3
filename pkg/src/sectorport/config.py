"""Run configuration: a YAML file with flat keys, sector blocks, and an lstm block.

Unknown keys anywhere in the document are errors (catches typos). All
randomness in a run flows from the single `seed` via derive_seed, so each
subcommand is independently reproducible.
"""

from __future__ import annotations

import datetime as dt
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .lstm import LstmConfig
from .market_data import SectorUniverse

_TOP_KEYS = {
    "data_dir",
    "sectors",
    "train_start",
    "train_end",
    "invest_date",
    "eval_date",
    "capital",
    "n_draws",
    "risk_free",
    "lstm",
    "seed",
    "endpoint",
}
_LSTM_KEYS = {
    "window",
    "horizon",
    "lstm_layers",
    "dropout_rate",
    "dense_width",
    "batch_size",
    "epochs",
    "learning_rate",
    "huber_delta",
}
_SECTOR_KEYS = {"name", "members"}


@dataclass(frozen=True)
class RunConfig:
    data_dir: Path
    sectors: tuple[SectorUniverse, ...]
    train_start: dt.date = dt.date(2016, 1, 1)
    train_end: dt.date = dt.date(2020, 12, 31)
    invest_date: dt.date = dt.date(2021, 1, 1)
    eval_date: dt.date = dt.date(2021, 6, 1)
    capital: float = 100_000.0
    n_draws: int = 10_000
    risk_free: float = 0.01
    lstm: LstmConfig = field(default_factory=LstmConfig)
    seed: int = 0
    endpoint: str | None = None

    def __post_init__(self):
        if not (self.train_start < self.train_end <= self.invest_date < self.eval_date):
            raise ValueError(
                "need train_start < train_end <= invest_date < eval_date, got "
                f"{self.train_start} / {self.train_end} / {self.invest_date} / {self.eval_date}"
            )
        if self.capital <= 0:
            raise ValueError(f"capital must be positive, got {self.capital}")

    def sector(self, name: str) -> SectorUniverse:
        for s in self.sectors:
            if s.sector_name == name:
                return s
        known = ", ".join(s.sector_name for s in self.sectors)
        raise ValueError(f"unknown sector {name!r} (configured: {known})")

    def all_symbols(self) -> tuple[str, ...]:
        """Member symbols in config order, first occurrence wins."""
        seen: list[str] = []
        for s in self.sectors:
            for sym in s.symbols:
                if sym not in seen:
                    seen.append(sym)
        return tuple(seen)


def derive_seed(seed: int, tag: str) -> int:
    """Purpose-specific substream seed: seed XOR first 8 bytes of sha256(tag)."""
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return (seed ^ int.from_bytes(digest[:8], "little")) & (2**63 - 1)


def _as_date(value, key: str) -> dt.date:
    if isinstance(value, dt.date) and not isinstance(value, dt.datetime):
        return value
    if isinstance(value, str):
        return dt.date.fromisoformat(value)
    raise ValueError(f"{key}: expected an ISO date, got {value!r}")


def _check_keys(mapping: dict, allowed: set[str], context: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ValueError(f"{context}: unknown keys {sorted(unknown)}")


def _parse_sector(block: dict, index: int) -> SectorUniverse:
    if not isinstance(block, dict):
        raise ValueError(f"sectors[{index}]: expected a mapping")
    _check_keys(block, _SECTOR_KEYS, f"sectors[{index}]")
    if "name" not in block or "members" not in block:
        raise ValueError(f"sectors[{index}]: needs 'name' and 'members'")
    members = []
    for m in block["members"]:
        if not (isinstance(m, (list, tuple)) and len(m) == 2):
            raise ValueError(f"sector {block['name']}: members are [symbol, index_weight] pairs")
        members.append((str(m[0]), float(m[1])))
    return SectorUniverse(str(block["name"]), tuple(members))


def load_config(path, seed_override: int | None = None) -> RunConfig:
    """Load and validate a YAML run configuration."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a mapping")
    _check_keys(doc, _TOP_KEYS, str(path))
    if "data_dir" not in doc or "sectors" not in doc:
        raise ValueError(f"{path}: needs 'data_dir' and 'sectors'")

    lstm_block = doc.get("lstm", {}) or {}
    if not isinstance(lstm_block, dict):
        raise ValueError(f"{path}: lstm must be a mapping")
    _check_keys(lstm_block, _LSTM_KEYS, f"{path}: lstm")
    seed = int(doc.get("seed", 0)) if seed_override is None else int(seed_override)
    lstm_config = LstmConfig(seed=seed, **lstm_block)

    data_dir = Path(doc["data_dir"])
    if not data_dir.is_absolute():
        data_dir = path.parent / data_dir

    kwargs = {}
    for key in ("train_start", "train_end", "invest_date", "eval_date"):
        if key in doc:
            kwargs[key] = _as_date(doc[key], key)
    if "capital" in doc:
        kwargs["capital"] = float(doc["capital"])
    if "n_draws" in doc:
        kwargs["n_draws"] = int(doc["n_draws"])
    if "risk_free" in doc:
        kwargs["risk_free"] = float(doc["risk_free"])
    if "endpoint" in doc:
        kwargs["endpoint"] = str(doc["endpoint"])

    sectors = tuple(_parse_sector(b, i) for i, b in enumerate(doc["sectors"]))
    return RunConfig(
        data_dir=data_dir, sectors=sectors, lstm=lstm_config, seed=seed, **kwargs
    )
