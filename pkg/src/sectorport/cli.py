"""Command-line pipeline: stats, frontier, train, backtest, plotdata, fetch.

Every subcommand reads one YAML config, derives any randomness it needs from
the config seed and a purpose tag, and writes its artifacts atomically under
--out, so reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import backtest as bt
from . import lstm as fc
from . import market_data as md
from . import portfolio as po
from .config import RunConfig, derive_seed, load_config


def _atomic_write(path: Path, data: str | bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_series(data_dir: Path, symbol: str) -> md.PriceSeries:
    path = Path(data_dir) / f"{symbol}.csv"
    if not path.exists():
        raise FileNotFoundError(f"no data file for {symbol}: expected {path}")
    return md.parse_csv(path.read_bytes(), symbol)


def _close_on_or_after(series: md.PriceSeries, date: dt.date) -> float:
    for b in series.bars:
        if b.date >= date:
            return b.close
    raise ValueError(f"{series.symbol}: no bar on or after {date}")


def _index_on_or_before(series: md.PriceSeries, date: dt.date) -> int:
    idx = -1
    for k, b in enumerate(series.bars):
        if b.date <= date:
            idx = k
    if idx < 0:
        raise ValueError(f"{series.symbol}: no bar on or before {date}")
    return idx


def cmd_stats(config: RunConfig, out_dir: Path) -> Path:
    """Per-symbol mean daily return and daily/annual volatility over the training window."""
    lines = ["symbol,mean_daily_return,daily_volatility,annual_volatility"]
    for symbol in config.all_symbols():
        series = _load_series(config.data_dir, symbol).restrict(config.train_start, config.train_end)
        stats = md.asset_stats(md.daily_returns(series))
        lines.append(
            f"{symbol},{stats.mean_daily_return:.12g},"
            f"{stats.daily_volatility:.12g},{stats.annual_volatility:.12g}"
        )
    path = Path(out_dir) / "stats.csv"
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def _sector_frontier(
    config: RunConfig, sector_name: str, n_draws: int | None, risk_free: float | None
) -> po.FrontierCloud:
    sector = config.sector(sector_name)
    series = [
        _load_series(config.data_dir, sym).restrict(config.train_start, config.train_end)
        for sym in sector.symbols
    ]
    mean, cov = po.mean_and_covariance(md.align(series))
    return po.build_frontier(
        mean,
        cov,
        n_draws=config.n_draws if n_draws is None else n_draws,
        risk_free=config.risk_free if risk_free is None else risk_free,
        seed=derive_seed(config.seed, f"frontier:{sector_name}"),
    )


def cmd_frontier(
    config: RunConfig,
    sector_name: str,
    out_dir: Path,
    n_draws: int | None = None,
    risk_free: float | None = None,
) -> tuple[Path, Path]:
    """Write the frontier cloud CSV and the two-portfolio report JSON for a sector."""
    cloud = _sector_frontier(config, sector_name, n_draws, risk_free)
    report = po.portfolio_report(
        sector_name, po.min_variance_portfolio(cloud), po.max_sharpe_portfolio(cloud)
    )
    csv_path = Path(out_dir) / f"frontier_{sector_name}.csv"
    json_path = Path(out_dir) / f"report_{sector_name}.json"
    _atomic_write(csv_path, po.frontier_csv_text(cloud))
    _atomic_write(json_path, _json_text(report))
    return csv_path, json_path


def cmd_train(config: RunConfig, symbol: str, out_dir: Path) -> tuple[Path, Path]:
    """Train the forecaster on a symbol's training-window closes; write checkpoint and trace."""
    series = _load_series(config.data_dir, symbol).restrict(config.train_start, config.train_end)
    lstm_config = fc.with_seed(config.lstm, derive_seed(config.seed, f"train:{symbol}"))
    result = fc.train(lstm_config, series.closes)
    ckpt_path = Path(out_dir) / "checkpoints" / f"{symbol}.ckpt"
    trace_path = Path(out_dir) / f"trace_{symbol}.csv"
    _atomic_write(ckpt_path, fc.checkpoint_bytes(result.model))
    _atomic_write(trace_path, fc.trace_csv_text(result.trace))
    return ckpt_path, trace_path


def _read_predicted_prices(path: Path) -> dict[str, float]:
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    if not lines or lines[0].strip() != "symbol,price":
        raise ValueError(f"{path}: expected header 'symbol,price'")
    prices = {}
    for line in lines[1:]:
        sym, price = line.split(",")
        prices[sym.strip()] = float(price)
    return prices


def _predict_eval_price(config: RunConfig, symbol: str, out_dir: Path) -> float:
    ckpt = Path(out_dir) / "checkpoints" / f"{symbol}.ckpt"
    if not ckpt.exists():
        raise FileNotFoundError(f"no checkpoint for {symbol}: expected {ckpt} (or pass --predicted-prices)")
    model = fc.load_checkpoint(ckpt)
    series = _load_series(config.data_dir, symbol)
    idx_eval = _index_on_or_before(series, config.eval_date)
    window, horizon = model.config.window, model.config.horizon
    start = idx_eval - horizon - window + 1
    if start < 0:
        raise ValueError(f"{symbol}: not enough history before {config.eval_date} for a {window}-day window")
    closes = series.closes[start : idx_eval - horizon + 1]
    return fc.predict_next(model, closes)


def _upsert_summary(summary_path: Path, row: bt.SummaryRow):
    rows: list[bt.SummaryRow] = []
    if summary_path.exists():
        for line in summary_path.read_text(encoding="utf-8").strip().split("\n")[1:]:
            sector, pred, act = line.split(",")
            rows.append(bt.SummaryRow(sector, float(pred), float(act)))
    rows = [r for r in rows if r.sector != row.sector]
    rows.append(row)
    _atomic_write(summary_path, bt.summary_csv_text(rows))


def cmd_backtest(
    config: RunConfig,
    sector_name: str,
    out_dir: Path,
    predicted_prices: Path | None = None,
    weights_file: Path | None = None,
    n_draws: int | None = None,
    risk_free: float | None = None,
) -> tuple[Path, Path, Path]:
    """Invest the configured capital per the sector's max-Sharpe weights and value it.

    Predicted end prices come from the per-symbol checkpoints unless a
    --predicted-prices CSV overrides them; a --weights-file JSON (symbol ->
    fraction) overrides the frontier-recommended weights.
    """
    sector = config.sector(sector_name)
    symbols = sector.symbols

    if weights_file is not None:
        mapping = json.loads(Path(weights_file).read_text(encoding="utf-8"))
        missing = [s for s in symbols if s not in mapping]
        if missing:
            raise ValueError(f"{weights_file}: missing weights for {missing}")
        weights = po.PortfolioWeights(symbols, np.array([mapping[s] for s in symbols], dtype=float))
    else:
        cloud = _sector_frontier(config, sector_name, n_draws, risk_free)
        weights = po.max_sharpe_portfolio(cloud).weights

    start_prices = {}
    end_actual = {}
    for sym in symbols:
        series = _load_series(config.data_dir, sym)
        start_prices[sym] = _close_on_or_after(series, config.invest_date)
        end_actual[sym] = series.bars[_index_on_or_before(series, config.eval_date)].close

    if predicted_prices is not None:
        end_predicted = _read_predicted_prices(predicted_prices)
        missing = [s for s in symbols if s not in end_predicted]
        if missing:
            raise ValueError(f"{predicted_prices}: missing predicted prices for {missing}")
    else:
        end_predicted = {sym: _predict_eval_price(config, sym, out_dir) for sym in symbols}

    ledger = bt.run_backtest(
        config.capital, weights, start_prices, end_actual, end_predicted, sector=sector_name
    )
    json_path = Path(out_dir) / f"ledger_{sector_name}.json"
    csv_path = Path(out_dir) / f"ledger_{sector_name}.csv"
    summary_path = Path(out_dir) / "summary.csv"
    _atomic_write(json_path, _json_text(bt.ledger_to_dict(ledger)))
    _atomic_write(csv_path, bt.ledger_csv_text(ledger))
    _upsert_summary(summary_path, bt.SummaryRow(sector_name, ledger.roi_predicted, ledger.roi_actual))
    return json_path, csv_path, summary_path


def cmd_plotdata(
    config: RunConfig, symbol: str, start: dt.date, end: dt.date, out_dir: Path
) -> Path:
    """Actual vs one-day-ahead predicted closes over a date range.

    Each prediction consumes the trailing window of *actual* closes, matching
    day-by-day tracking rather than recursive multi-step forecasting.
    """
    ckpt = Path(out_dir) / "checkpoints" / f"{symbol}.ckpt"
    if not ckpt.exists():
        raise FileNotFoundError(f"no checkpoint for {symbol}: expected {ckpt}")
    model = fc.load_checkpoint(ckpt)
    series = _load_series(config.data_dir, symbol)
    closes = series.closes
    window, horizon = model.config.window, model.config.horizon

    indices = [k for k, d in enumerate(series.dates) if start <= d <= end]
    if not indices:
        raise ValueError(f"{symbol}: no trading dates in [{start}, {end}]")
    if indices[0] - horizon - window + 1 < 0:
        raise ValueError(
            f"{symbol}: range starts at {series.dates[indices[0]]} without {window} days of history"
        )

    windows = np.stack([closes[k - horizon - window + 1 : k - horizon + 1] for k in indices])
    scaled_pred, _ = fc.forward_batch(model, model.scaler.transform(windows), training=False)
    predicted = model.scaler.inverse_transform(scaled_pred)

    lines = ["date,actual_close,predicted_close"]
    for k, pred in zip(indices, predicted):
        lines.append(f"{series.dates[k].isoformat()},{closes[k]:.12g},{pred:.12g}")
    path = Path(out_dir) / f"plotdata_{symbol}.csv"
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def cmd_fetch(config: RunConfig, endpoint: str | None = None) -> list[Path]:
    """Download every configured symbol's history into data_dir as CSV."""
    url = endpoint or config.endpoint
    if not url:
        raise ValueError("no fetch endpoint: set 'endpoint' in the config or pass --endpoint")
    written = []
    for symbol in config.all_symbols():
        series = md.fetch_history(symbol, config.train_start, config.eval_date, url)
        path = Path(config.data_dir) / f"{symbol}.csv"
        _atomic_write(path, md.serialize_csv(series))
        written.append(path)
    return written


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sectorport", description=__doc__)
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("stats", help="per-symbol return/volatility table")

    p = sub.add_parser("frontier", help="Monte-Carlo frontier and portfolio report")
    p.add_argument("sector")
    p.add_argument("--draws", type=int, default=None, help="override n_draws")
    p.add_argument("--risk-free", type=float, default=None, help="override the risk-free rate")

    p = sub.add_parser("train", help="train the forecaster for one symbol")
    p.add_argument("symbol")

    p = sub.add_parser("backtest", help="allocate at invest_date, value at eval_date")
    p.add_argument("sector")
    p.add_argument("--draws", type=int, default=None, help="override n_draws")
    p.add_argument("--risk-free", type=float, default=None, help="override the risk-free rate")
    p.add_argument("--predicted-prices", default=None, help="CSV 'symbol,price' overriding model predictions")
    p.add_argument("--weights-file", default=None, help="JSON {symbol: fraction} overriding frontier weights")

    p = sub.add_parser("plotdata", help="actual vs predicted close series")
    p.add_argument("symbol")
    p.add_argument("--start", required=True, type=dt.date.fromisoformat)
    p.add_argument("--end", required=True, type=dt.date.fromisoformat)

    p = sub.add_parser("fetch", help="download price history into data_dir")
    p.add_argument("--endpoint", default=None, help="history HTTP endpoint")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed)
        out_dir = Path(args.out)
        if args.command == "stats":
            print(cmd_stats(config, out_dir))
        elif args.command == "frontier":
            for p in cmd_frontier(config, args.sector, out_dir, args.draws, args.risk_free):
                print(p)
        elif args.command == "train":
            for p in cmd_train(config, args.symbol, out_dir):
                print(p)
        elif args.command == "backtest":
            paths = cmd_backtest(
                config,
                args.sector,
                out_dir,
                predicted_prices=Path(args.predicted_prices) if args.predicted_prices else None,
                weights_file=Path(args.weights_file) if args.weights_file else None,
                n_draws=args.draws,
                risk_free=args.risk_free,
            )
            for p in paths:
                print(p)
        elif args.command == "plotdata":
            print(cmd_plotdata(config, args.symbol, args.start, args.end, out_dir))
        elif args.command == "fetch":
            for p in cmd_fetch(config, endpoint=args.endpoint):
                print(p)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
