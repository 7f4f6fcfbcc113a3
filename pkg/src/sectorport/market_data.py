"""Historical price ingestion, validation, and return/volatility statistics.

Everything downstream (frontier sampling, forecasting, backtesting) consumes
close prices only; the other OHLCV columns are validated and stored but not
used. Dates are aligned across symbols by intersection, never forward-filled.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import requests

log = logging.getLogger(__name__)

TRADING_DAYS = 250
CSV_HEADER = "date,open,high,low,close,volume,adj_close"


class CsvFormatError(ValueError):
    """Raised when CSV input violates the price-file schema."""


class FetchError(RuntimeError):
    """Raised when a history download fails after exhausting retries."""


@dataclass(frozen=True)
class PriceBar:
    """One day of OHLCV data for a single symbol."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: int
    adj_close: float

    def check(self) -> str | None:
        """Return a description of the violated invariant, or None if valid."""
        if self.low > self.high:
            return f"low {self.low} > high {self.high}"
        if self.close <= 0:
            return f"close {self.close} is not positive"
        if self.volume < 0:
            return f"volume {self.volume} is negative"
        return None


@dataclass(frozen=True)
class PriceSeries:
    """Validated, date-ordered bars for one symbol."""

    symbol: str
    bars: tuple[PriceBar, ...]

    def __post_init__(self):
        if not self.bars:
            raise ValueError(f"{self.symbol}: price series is empty")
        dates = [b.date for b in self.bars]
        if any(a >= b for a, b in zip(dates, dates[1:])):
            raise ValueError(f"{self.symbol}: dates are not strictly increasing")

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(b.date for b in self.bars)

    @property
    def closes(self) -> np.ndarray:
        return np.array([b.close for b in self.bars], dtype=float)

    def restrict(self, start: dt.date, end: dt.date) -> "PriceSeries":
        """Sub-series with start <= date <= end."""
        kept = tuple(b for b in self.bars if start <= b.date <= end)
        if not kept:
            raise ValueError(f"{self.symbol}: no bars in [{start}, {end}]")
        return PriceSeries(self.symbol, kept)


@dataclass(frozen=True)
class ReturnSeries:
    """Daily simple returns; dates align to the second through last bar."""

    symbol: str
    returns: np.ndarray
    dates: tuple[dt.date, ...]


@dataclass(frozen=True)
class AssetStats:
    mean_daily_return: float
    daily_volatility: float
    annual_volatility: float


@dataclass(frozen=True)
class SectorUniverse:
    """Named sector with member symbols and their index weights.

    Index weights are metadata from the sectoral-index construction; they do
    not constrain portfolio weights.
    """

    sector_name: str
    members: tuple[tuple[str, float], ...]

    def __post_init__(self):
        symbols = [s for s, _ in self.members]
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"{self.sector_name}: duplicate member symbols")
        for sym, w in self.members:
            if w <= 0:
                raise ValueError(f"{self.sector_name}: index weight for {sym} must be > 0")

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.members)


@dataclass(frozen=True)
class AlignedCloseMatrix:
    """Close prices over the common trading dates of several symbols.

    closes has shape (n_dates, n_symbols); column order follows the input
    series order.
    """

    symbols: tuple[str, ...]
    dates: tuple[dt.date, ...]
    closes: np.ndarray = field(repr=False)


def _parse_bar(fields: list[str], lineno: int) -> PriceBar:
    try:
        return PriceBar(
            date=dt.date.fromisoformat(fields[0]),
            open=float(fields[1]),
            high=float(fields[2]),
            low=float(fields[3]),
            close=float(fields[4]),
            volume=int(fields[5]),
            adj_close=float(fields[6]),
        )
    except (ValueError, IndexError) as exc:
        raise CsvFormatError(f"line {lineno}: malformed row: {exc}") from exc


def parse_csv(raw_text: bytes | str, symbol: str, strict: bool = True) -> PriceSeries:
    """Parse price history CSV into a validated PriceSeries.

    The expected schema is a header line ``date,open,high,low,close,volume,
    adj_close`` followed by one row per trading day. Rows may arrive in any
    order; the result is sorted by date. Duplicate dates are always rejected.
    In strict mode a bar violating its invariants fails the parse; in lenient
    mode it is dropped with a warning.
    """
    if isinstance(raw_text, bytes):
        raw_text = raw_text.decode("utf-8")
    lines = raw_text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise CsvFormatError(f"line 1: expected header {CSV_HEADER!r}")

    bars = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 7:
            raise CsvFormatError(f"line {lineno}: expected 7 fields, got {len(fields)}")
        bar = _parse_bar(fields, lineno)
        problem = bar.check()
        if problem is not None:
            if strict:
                raise CsvFormatError(f"line {lineno}: invalid bar ({problem})")
            log.warning("%s: dropping line %d (%s)", symbol, lineno, problem)
            continue
        bars.append(bar)

    bars.sort(key=lambda b: b.date)
    for a, b in zip(bars, bars[1:]):
        if a.date == b.date:
            raise CsvFormatError(f"duplicate date {a.date} for {symbol}")
    if not bars:
        raise CsvFormatError(f"{symbol}: no valid rows")
    return PriceSeries(symbol, tuple(bars))


def serialize_csv(series: PriceSeries) -> str:
    """Render a PriceSeries in the exact schema parse_csv accepts.

    Floats use shortest round-trip representation, so
    parse_csv(serialize_csv(s)) == s.
    """
    lines = [CSV_HEADER]
    for b in series.bars:
        lines.append(
            f"{b.date.isoformat()},{float(b.open)!r},{float(b.high)!r},{float(b.low)!r},"
            f"{float(b.close)!r},{int(b.volume)},{float(b.adj_close)!r}"
        )
    return "\n".join(lines) + "\n"


def fetch_history(
    symbol: str,
    start: dt.date,
    end: dt.date,
    endpoint: str,
    max_attempts: int = 3,
    timeout: float = 10.0,
    retry_wait: float = 0.1,
) -> PriceSeries:
    """Download price history over HTTP and parse it.

    Issues GET <endpoint>?symbol=...&start=...&end=... expecting the CSV
    schema of parse_csv in the body. Connection failures and 5xx responses
    are retried up to max_attempts total attempts; other HTTP errors and an
    empty body fail immediately.
    """
    if start >= end:
        raise ValueError(f"start {start} must precede end {end}")

    params = {"symbol": symbol, "start": start.isoformat(), "end": end.isoformat()}
    last_error = None
    for attempt in range(1, max_attempts + 1):
        try:
            resp = requests.get(endpoint, params=params, timeout=timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_error = f"connection failed: {exc}"
        else:
            if resp.status_code >= 500:
                last_error = f"server returned {resp.status_code}"
            elif resp.status_code != 200:
                raise FetchError(f"{symbol}: HTTP {resp.status_code} from {endpoint}")
            elif not resp.content:
                raise FetchError(f"{symbol}: empty response body from {endpoint}")
            else:
                return parse_csv(resp.content, symbol)
        if attempt < max_attempts:
            time.sleep(retry_wait)
    raise FetchError(f"{symbol}: {last_error} after {max_attempts} attempts")


def daily_returns(series: PriceSeries) -> ReturnSeries:
    """Simple daily returns: r[i] = close[i+1] / close[i] - 1."""
    if len(series.bars) < 2:
        raise ValueError(f"{series.symbol}: need at least 2 bars for returns")
    closes = series.closes
    rets = closes[1:] / closes[:-1] - 1.0
    return ReturnSeries(series.symbol, rets, series.dates[1:])


def asset_stats(returns: ReturnSeries) -> AssetStats:
    """Mean daily return and daily/annualized volatility.

    Daily volatility is the n-1 sample standard deviation; annualization
    multiplies by sqrt(250) trading days.
    """
    r = np.asarray(returns.returns, dtype=float)
    if r.size < 2:
        raise ValueError(f"{returns.symbol}: need at least 2 returns")
    daily = float(np.std(r, ddof=1))
    return AssetStats(
        mean_daily_return=float(np.mean(r)),
        daily_volatility=daily,
        annual_volatility=daily * math.sqrt(TRADING_DAYS),
    )


def align(series_list: list[PriceSeries]) -> AlignedCloseMatrix:
    """Close-price matrix over the intersection of all series' dates."""
    if not series_list:
        raise ValueError("need at least one series to align")
    common = set(series_list[0].dates)
    for s in series_list[1:]:
        common &= set(s.dates)
    if not common:
        symbols = ", ".join(s.symbol for s in series_list)
        raise ValueError(f"no common dates across {symbols}")
    dates = tuple(sorted(common))
    closes = np.empty((len(dates), len(series_list)), dtype=float)
    for j, s in enumerate(series_list):
        by_date = {b.date: b.close for b in s.bars}
        closes[:, j] = [by_date[d] for d in dates]
    return AlignedCloseMatrix(tuple(s.symbol for s in series_list), dates, closes)
