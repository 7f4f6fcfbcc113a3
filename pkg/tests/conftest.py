import datetime as dt

import numpy as np
import pytest

from sectorport.market_data import PriceBar, PriceSeries, CSV_HEADER


def bar(date, close, low=None, high=None, volume=1000):
    """PriceBar with consistent OHLC derived from the close."""
    low = close * 0.95 if low is None else low
    high = close * 1.05 if high is None else high
    return PriceBar(
        date=date, open=close, high=high, low=low, close=close, volume=volume, adj_close=close
    )


def weekdays(start: dt.date, n: int) -> list[dt.date]:
    """n consecutive weekday dates from start."""
    out = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def series_from_closes(symbol, closes, start=dt.date(2020, 1, 1)) -> PriceSeries:
    dates = weekdays(start, len(closes))
    return PriceSeries(symbol, tuple(bar(d, float(c)) for d, c in zip(dates, closes)))


def gbm_closes(n, seed, s0=100.0, drift=0.0004, vol=0.015) -> np.ndarray:
    """Synthetic geometric-Brownian close path."""
    rng = np.random.default_rng(seed)
    log_rets = rng.normal(drift, vol, size=n - 1)
    return s0 * np.exp(np.concatenate([[0.0], np.cumsum(log_rets)]))


def csv_text(rows) -> str:
    """CSV document from (date, open, high, low, close, volume, adj_close) tuples."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join(str(x) for x in r))
    return "\n".join(lines) + "\n"


@pytest.fixture
def three_row_csv() -> str:
    return csv_text(
        [
            ("2020-01-02", 10, 11, 9, 10.5, 1000, 10.5),
            ("2020-01-03", 10.5, 11.5, 9.5, 11.0, 1100, 11.0),
            ("2020-01-06", 11.0, 12.0, 10.0, 10.8, 900, 10.8),
        ]
    )
