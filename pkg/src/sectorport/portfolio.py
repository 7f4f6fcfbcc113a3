"""Mean-variance statistics, Monte-Carlo efficient frontiers, and portfolio selection.

The frontier is the full cloud of randomly weighted portfolios (10,000 draws
by default); the minimum-variance and maximum-Sharpe portfolios are selected
by scanning it. Weight vectors are independent uniform(0,1) draws normalized
to sum to one, so short selling is excluded by construction.

Draw ``i`` always consumes doubles ``[i*n, (i+1)*n)`` of a single PCG64
stream keyed by the seed, so a cloud can be generated in chunks (or by
parallel workers holding disjoint draw ranges) and still be bit-identical to
a serial run.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence

from .market_data import AlignedCloseMatrix, TRADING_DAYS

DEFAULT_DRAWS = 10_000
DEFAULT_RISK_FREE = 0.01


@dataclass(frozen=True)
class CovarianceMatrix:
    """Annualized return covariance, validated symmetric and PSD."""

    symbols: tuple[str, ...]
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.symbols):
            raise ValueError(f"covariance shape {m.shape} does not match {len(self.symbols)} symbols")
        if not np.all(np.abs(m - m.T) <= 1e-12):
            raise ValueError("covariance matrix is not symmetric")
        sym = (m + m.T) / 2.0
        eigvals = np.linalg.eigvalsh(sym)
        if eigvals.min() < -1e-9:
            raise ValueError(f"covariance matrix is not PSD (min eigenvalue {eigvals.min():.3g})")
        object.__setattr__(self, "entries", sym)


@dataclass(frozen=True)
class PortfolioWeights:
    """Nonnegative allocation fractions summing to one."""

    symbols: tuple[str, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.symbols),):
            raise ValueError(f"{len(self.symbols)} symbols but weight shape {w.shape}")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    def as_dict(self) -> dict[str, float]:
        return {s: float(w) for s, w in zip(self.symbols, self.weights)}


@dataclass(frozen=True)
class FrontierPoint:
    weights: PortfolioWeights
    annual_return: float
    annual_risk: float
    sharpe: float
    draw_index: int


@dataclass(frozen=True)
class FrontierCloud:
    points: tuple[FrontierPoint, ...]
    seed: int
    n_draws: int
    risk_free: float

    def __post_init__(self):
        if len(self.points) != self.n_draws:
            raise ValueError(f"{len(self.points)} points for n_draws={self.n_draws}")
        if any(p.draw_index != i for i, p in enumerate(self.points)):
            raise ValueError("draw_index values must be 0..n_draws-1 in order")


def mean_and_covariance(aligned: AlignedCloseMatrix) -> tuple[np.ndarray, CovarianceMatrix]:
    """Annualized mean vector and sample covariance of columnwise daily returns.

    Daily means and the n-1 sample covariance are both scaled by 250 trading
    days, matching the volatility annualization convention.
    """
    closes = aligned.closes
    if closes.shape[0] < 3:
        raise ValueError(f"need >= 3 aligned dates, got {closes.shape[0]}")
    rets = closes[1:] / closes[:-1] - 1.0
    mean = rets.mean(axis=0) * TRADING_DAYS
    cov = np.atleast_2d(np.cov(rets, rowvar=False, ddof=1)) * TRADING_DAYS
    cov = (cov + cov.T) / 2.0
    return mean, CovarianceMatrix(aligned.symbols, cov)


def portfolio_stats(w: PortfolioWeights, mean: np.ndarray, cov) -> tuple[float, float]:
    """Annualized (return, risk) of one weight vector: w'mean and sqrt(w'Cw)."""
    entries = cov.entries if isinstance(cov, CovarianceMatrix) else np.asarray(cov, dtype=float)
    wv = w.weights
    mean = np.asarray(mean, dtype=float)
    if mean.shape != wv.shape or entries.shape != (wv.size, wv.size):
        raise ValueError(
            f"dimension mismatch: weights {wv.shape}, mean {mean.shape}, cov {entries.shape}"
        )
    variance = float(wv @ entries @ wv)
    if variance < -1e-9:
        raise ValueError(f"invalid covariance: w'Cw = {variance:.3g} < 0")
    return float(wv @ mean), float(np.sqrt(max(variance, 0.0)))


def random_weights(n: int, rng: Generator) -> PortfolioWeights:
    """n uniform(0,1) draws normalized by their sum.

    Consumes exactly n doubles from rng, one per asset (the frontier's
    chunked generation relies on this).
    """
    if n < 1:
        raise ValueError("need at least one asset")
    x = rng.random(n)
    while x.sum() == 0.0:  # probability ~0, but normalization needs sum > 0
        x = rng.random(n)
    return PortfolioWeights(tuple(f"asset{i}" for i in range(n)), x / x.sum())


def sharpe_ratio(annual_return: float, annual_risk: float, risk_free: float = DEFAULT_RISK_FREE) -> float:
    """Excess return over the risk-free rate per unit of risk."""
    if annual_risk <= 0:
        raise ValueError(f"annual_risk must be positive, got {annual_risk}")
    return (annual_return - risk_free) / annual_risk


def _weight_block(seed: int, start: int, count: int, n_assets: int) -> np.ndarray:
    """Weight rows for draws [start, start+count) of the seed's stream.

    Row i is the normalization of doubles [(start+i)*n, (start+i+1)*n) of
    PCG64(seed)'s output, independent of how draws are chunked.
    """
    bitgen = PCG64(SeedSequence(seed))
    if start:
        bitgen = bitgen.advance(start * n_assets)
    raw = Generator(bitgen).random((count, n_assets))
    sums = raw.sum(axis=1, keepdims=True)
    if (sums == 0.0).any():  # pragma: no cover - probability ~0
        raise RuntimeError("degenerate all-zero uniform draw")
    return raw / sums


def build_frontier(
    mean: np.ndarray,
    cov: CovarianceMatrix,
    n_draws: int = DEFAULT_DRAWS,
    risk_free: float = DEFAULT_RISK_FREE,
    seed: int = 0,
) -> FrontierCloud:
    """Monte-Carlo cloud of randomly weighted portfolios.

    Deterministic for a fixed (seed, n_draws): every draw's weights are a
    fixed function of (seed, draw_index), so prefixes are nested across
    different n_draws values.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    mean = np.asarray(mean, dtype=float)
    symbols = cov.symbols
    n = len(symbols)
    if mean.shape != (n,):
        raise ValueError(f"mean shape {mean.shape} does not match {n} symbols")

    weights = _weight_block(seed, 0, n_draws, n)
    returns = weights @ mean
    variances = np.einsum("ij,ij->i", weights @ cov.entries, weights)
    if variances.min() < -1e-9:
        raise ValueError(f"invalid covariance: w'Cw = {variances.min():.3g} < 0")
    risks = np.sqrt(np.maximum(variances, 0.0))
    if (risks <= 0).any():
        raise ValueError("zero-risk draw encountered; Sharpe ratio undefined")
    sharpes = (returns - risk_free) / risks

    points = tuple(
        FrontierPoint(
            weights=PortfolioWeights(symbols, weights[i]),
            annual_return=float(returns[i]),
            annual_risk=float(risks[i]),
            sharpe=float(sharpes[i]),
            draw_index=i,
        )
        for i in range(n_draws)
    )
    return FrontierCloud(points, seed=seed, n_draws=n_draws, risk_free=risk_free)


def min_variance_portfolio(cloud: FrontierCloud) -> FrontierPoint:
    """Cloud point with minimum risk; ties resolve to the lowest draw_index."""
    if not cloud.points:
        raise ValueError("empty frontier cloud")
    risks = np.fromiter((p.annual_risk for p in cloud.points), dtype=float, count=len(cloud.points))
    return cloud.points[int(np.argmin(risks))]


def max_sharpe_portfolio(cloud: FrontierCloud) -> FrontierPoint:
    """Cloud point with maximum Sharpe ratio; ties resolve to the lowest draw_index."""
    if not cloud.points:
        raise ValueError("empty frontier cloud")
    if any(p.annual_risk <= 0 for p in cloud.points):
        raise ValueError("all points must have positive risk")
    sharpes = np.fromiter((p.sharpe for p in cloud.points), dtype=float, count=len(cloud.points))
    return cloud.points[int(np.argmax(sharpes))]


def analytic_min_variance(cov: CovarianceMatrix) -> PortfolioWeights:
    """Closed-form minimum-variance weights C^-1 1 / (1' C^-1 1).

    This is the unconstrained (sum-to-one only) optimum, used as a testing
    oracle for the Monte-Carlo frontier. It is only comparable to the
    nonnegative cloud when all components come out nonnegative; otherwise the
    fixture is invalid and an error is raised.
    """
    ones = np.ones(len(cov.symbols))
    try:
        x = np.linalg.solve(cov.entries, ones)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular covariance matrix: {exc}") from exc
    w = x / x.sum()
    if (w < 0).any():
        raise ValueError(
            "unconstrained minimum-variance weights have negative components; "
            "fixture invalid for nonnegative comparison"
        )
    return PortfolioWeights(cov.symbols, w)


def frontier_csv_text(cloud: FrontierCloud) -> str:
    """Frontier export: draw_index,risk,return,sharpe,w_<SYM>... with 12 significant digits."""
    if not cloud.points:
        raise ValueError("empty frontier cloud")
    symbols = cloud.points[0].weights.symbols
    out = io.StringIO()
    out.write("draw_index,risk,return,sharpe," + ",".join(f"w_{s}" for s in symbols) + "\n")
    for p in cloud.points:
        ws = ",".join(f"{w:.12g}" for w in p.weights.weights)
        out.write(f"{p.draw_index},{p.annual_risk:.12g},{p.annual_return:.12g},{p.sharpe:.12g},{ws}\n")
    return out.getvalue()


def portfolio_report(sector_name: str, min_risk: FrontierPoint, opt_risk: FrontierPoint) -> dict:
    """Report dict with min-risk and opt-risk blocks, one weight per symbol."""

    def block(p: FrontierPoint) -> dict:
        return {
            "weights": p.weights.as_dict(),
            "annual_return": p.annual_return,
            "annual_risk": p.annual_risk,
        }

    return {"sector": sector_name, "min_risk": block(min_risk), "opt_risk": block(opt_risk)}
