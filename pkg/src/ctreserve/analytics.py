"""Summaries of simulated reserve distributions and method comparison tables.

Percentages are relative to the chain-ladder reserve R_hat. Empirical
quantiles use linear interpolation between order statistics at
h = (N - 1) p + 1 (numpy's default "linear" method).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ctreserve.bootstrap import BootstrapConfig, ConfigError, ParametricReserve, fit_parametric, run_bootstrap
from ctreserve.chain_ladder import estimate, ultimates_and_reserve
from ctreserve.triangle import Triangle

DEFAULT_PROBS = (0.5, 0.75, 0.95, 0.995)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    def density(self) -> np.ndarray:
        """Counts normalised to probability mass per bin."""
        return self.counts / self.counts.sum()

    def to_dict(self) -> dict:
        return {"edges": self.edges.tolist(), "counts": self.counts.tolist()}


@dataclass(frozen=True)
class DistributionSummary:
    count: int
    mean: float
    sd: float
    R_hat: float
    msep_pct: float
    quantiles: dict = field(default_factory=dict)
    q995_excess_pct: float = float("nan")
    histogram: Histogram | None = None

    def excess_pct(self, p: float) -> float:
        return 100.0 * (self.quantiles[p] - self.R_hat) / self.R_hat

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "sd": self.sd,
            "R_hat": self.R_hat,
            "msep_pct": round(self.msep_pct, 4),
            "quantiles": {str(p): q for p, q in self.quantiles.items()},
            "q995_excess_pct": round(self.q995_excess_pct, 4),
        }


def quantile(samples, p):
    return np.quantile(np.asarray(samples, dtype=float), p, method="linear")


def histogram(samples, bins=100, range_=None) -> Histogram:
    """Bin counts; ``bins`` is a positive count or an increasing sequence of edges."""
    x = np.asarray(samples, dtype=float)
    if np.ndim(bins) == 0:
        if int(bins) != bins or bins < 1:
            raise ValueError(f"bin count must be a positive integer, got {bins!r}")
        bins = int(bins)
    else:
        bins = np.asarray(bins, dtype=float)
        if bins.ndim != 1 or len(bins) < 2 or np.any(np.diff(bins) <= 0):
            raise ValueError("bin edges must be a strictly increasing sequence of length >= 2")
    counts, edges = np.histogram(x, bins=bins, range=range_)
    return Histogram(edges=edges, counts=counts)


def summarize(samples, R_hat: float, probs=DEFAULT_PROBS, bins=100) -> DistributionSummary:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("cannot summarise an empty sample")
    if not R_hat > 0:
        raise ValueError("R_hat must be positive")
    probs = tuple(sorted(set(probs) | {0.995}))
    qs = np.atleast_1d(quantile(x, probs))
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    qmap = {p: float(q) for p, q in zip(probs, qs)}
    return DistributionSummary(
        count=int(x.size),
        mean=float(x.mean()),
        sd=sd,
        R_hat=float(R_hat),
        msep_pct=100.0 * sd / R_hat,
        quantiles=qmap,
        q995_excess_pct=100.0 * (qmap[0.995] - R_hat) / R_hat,
        histogram=histogram(x, bins) if bins else None,
    )


def parametric_quantile(pr: ParametricReserve, p: float) -> float:
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if pr.degenerate:
        return pr.mu_R
    if pr.family == "lognormal":
        return float(stats.lognorm.ppf(p, s=np.sqrt(pr.params["sigma2_log"]), scale=np.exp(pr.params["mu_log"])))
    return float(stats.gamma.ppf(p, a=pr.params["shape"], scale=1.0 / pr.params["rate"]))


METHOD_LABELS = {
    "lognormal": "Mack Log-normal",
    "mack_residual": "Mack Bootstrap",
    "time_series": "Time series Bootstrap",
    "ct": "Continuous-time Bootstrap",
}


def comparison_table(t: Triangle, M=100_000, seed=0, neg_policy="clamp_zero", threads=1, ts_param_mode="direct"):
    """Rows (method, msep_pct, q995_excess_pct) for the four estimators.

    Returns (rows, results) where ``results`` maps each bootstrap method to
    its :class:`BootstrapResult` (None when the method degenerates to the
    point mass R_hat).
    """
    R_hat = ultimates_and_reserve(t, estimate(t).F).total
    ln = fit_parametric(t, "lognormal")
    rows = [
        {
            "method": METHOD_LABELS["lognormal"],
            "msep_pct": 100.0 * np.sqrt(ln.sigma2_R) / R_hat,
            "q995_excess_pct": 100.0 * (parametric_quantile(ln, 0.995) - R_hat) / R_hat,
        }
    ]
    results = {}
    for method in ("mack_residual", "time_series", "ct"):
        cfg = BootstrapConfig(
            method=method, M=M, seed=seed, neg_policy=neg_policy, ts_param_mode=ts_param_mode, threads=threads
        )
        try:
            res = run_bootstrap(t, cfg)
        except ConfigError:
            if method != "mack_residual":
                raise
            # no residuals to resample: all variances vanish, the law is the point R_hat
            results[method] = None
            rows.append({"method": METHOD_LABELS[method], "msep_pct": 0.0, "q995_excess_pct": 0.0})
            continue
        s = summarize(res.samples, R_hat, bins=None)
        results[method] = res
        rows.append({"method": METHOD_LABELS[method], "msep_pct": s.msep_pct, "q995_excess_pct": s.q995_excess_pct})
    return rows, results
