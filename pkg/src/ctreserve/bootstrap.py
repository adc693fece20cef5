"""Reserve-distribution estimators.

Three two-stage bootstraps (parameter error, then process error) share the
final kernel :func:`simulate_reserves`:

``ct``
    continuous-time model; pseudo-data and the lower triangle are drawn from
    the exact compound Poisson-Gamma transition, so cells never go negative.
``mack_residual``
    pseudo-data from resampled Pearson residuals, Gaussian process error.
``time_series``
    Gaussian pseudo-data (or direct Normal / scaled chi-square parameter
    draws), Gaussian process error.

Replicates are processed in fixed-size blocks; block ``b`` draws from a
Philox stream keyed by ``(seed, b)``. Since the block size does not depend
on the worker count, the sample vector is bit-identical for any number of
threads.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from ctreserve.chain_ladder import DevParams, estimate, mack_msep, ultimates_and_reserve
from ctreserve.ct_model import sample_steps, to_ct_arrays
from ctreserve.triangle import Triangle

logger = logging.getLogger(__name__)

METHODS = ("ct", "mack_residual", "time_series")
NEG_POLICIES = ("clamp_zero", "drop_replicate")
TS_MODES = ("resample", "direct")
BLOCK_SIZE = 4096


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BootstrapConfig:
    method: str = "ct"
    M: int = 100_000
    seed: int = 0
    neg_policy: str = "clamp_zero"
    ts_param_mode: str = "direct"
    threads: int = 1
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not isinstance(self.M, (int, np.integer)) or self.M < 1:
            raise ConfigError(f"replicate count must be a positive integer, got {self.M!r}")
        if self.neg_policy not in NEG_POLICIES:
            raise ConfigError(f"unknown neg_policy {self.neg_policy!r}; choose from {NEG_POLICIES}")
        if self.ts_param_mode not in TS_MODES:
            raise ConfigError(f"unknown ts_param_mode {self.ts_param_mode!r}; choose from {TS_MODES}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BootstrapResult:
    samples: np.ndarray
    dropped: int
    zero_clamped: int
    config: BootstrapConfig
    # replicates with at least one negative simulated cell before the policy was applied
    negative_replicates: int = 0
    R_hat: float = float("nan")

    @property
    def negative_rate(self) -> float:
        return self.negative_replicates / self.config.M


@dataclass(frozen=True)
class ParametricReserve:
    family: str
    mu_R: float
    sigma2_R: float
    params: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.sigma2_R == 0.0


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for replicate block ``block``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


# -- shared vectorised pieces -------------------------------------------------


def reestimate(C: np.ndarray, nxt: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Chain-ladder estimators on pseudo-data, one row per replicate.

    ``C`` is the observed triangle array (NaN below the diagonal);
    ``nxt[j-1]`` has shape (B, n-j) and holds resimulated C_{i,j+1} for the
    observed pairs. Returns (F, Sigma^2) of shape (B, n-1), the last variance
    from the min rule.
    """
    n = C.shape[0]
    B = nxt[0].shape[0]
    F = np.empty((B, n - 1))
    S2 = np.empty((B, n - 1))
    for j in range(1, n):
        a = C[: n - j, j - 1]
        b = nxt[j - 1]
        F[:, j - 1] = b.sum(axis=1) / a.sum()
        if j <= n - 2:
            S2[:, j - 1] = np.sum(a * (b / a - F[:, j - 1 : j]) ** 2, axis=1) / (n - j - 1)
    S2[:, n - 2] = tail_rule(S2[:, : n - 2])
    return F, S2


def tail_rule(S2: np.ndarray) -> np.ndarray:
    """Row-wise min rule on the trailing two variances; 0 where it degenerates."""
    if S2.shape[1] < 2:
        return S2[:, -1].copy()
    s_prev = np.sqrt(S2[:, -2])
    s_last = np.sqrt(S2[:, -1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(s_prev > 0, s_last**2 / np.where(s_prev > 0, s_prev, 1.0), 0.0)
    return np.minimum(np.minimum(ratio, s_prev), s_last) ** 2


def simulate_reserves(diagonal: np.ndarray, step: Callable[[np.ndarray, int], np.ndarray], B: int) -> np.ndarray:
    """Complete the lower triangle with ``step`` and return R^m per replicate.

    ``diagonal[i-1]`` is C_{i,n-i+1}. ``step(X, j)`` maps the (B, k) block of
    cells currently at development year j to year j + 1. The result is
    sum_{i>=2} (C^m_{i,n} - C_{i,n-i+1}).
    """
    diagonal = np.asarray(diagonal, dtype=float)
    n = len(diagonal)
    X = np.tile(diagonal, (B, 1))
    for j in range(1, n):
        rows = slice(n - j, n)
        X[:, rows] = step(X[:, rows], j)
    return (X - diagonal).sum(axis=1)


class _NegTracker:
    """Applies the negative-cell policy to simulated lower-triangle cells.

    Step-1 pseudo-data only feed the estimators and are left as drawn.
    """

    def __init__(self, B: int):
        self.touched = np.zeros(B, dtype=bool)
        self.clamped = 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        neg = X < 0
        if neg.any():
            self.touched |= neg.reshape(neg.shape[0], -1).any(axis=1)
            self.clamped += int(neg.sum())
            X = np.where(neg, 0.0, X)
        return X


def _gaussian_step(F: np.ndarray, S2: np.ndarray, rng: np.random.Generator, tracker: _NegTracker):
    def step(X, j):
        f = F[:, j - 1 : j]
        s2 = S2[:, j - 1 : j]
        Z = rng.standard_normal(X.shape)
        # a cell clamped to 0 stays at 0
        return tracker.apply(f * X + np.sqrt(s2 * np.maximum(X, 0.0)) * Z)

    return step


def _ct_step(F: np.ndarray, S2: np.ndarray, rng: np.random.Generator):
    with np.errstate(divide="ignore", invalid="ignore"):
        f, s2 = to_ct_arrays(F, S2)
    # a pseudo-column of zeros gives F = 0: everything is absorbed
    s2 = np.where(F > 0, s2, 0.0)

    def step(X, j):
        return sample_steps(X, f[:, j - 1 : j], s2[:, j - 1 : j], 1.0, rng, growth=F[:, j - 1 : j])

    return step


# -- per-method block kernels ---------------------------------------------------


def ct_parameter_draws(C: np.ndarray, p: DevParams, B: int, rng: np.random.Generator):
    """Step 1 of the ct bootstrap: (F^m, Sigma^2_m) of shape (B, n-1).

    Every observed transition restarts from the observed C_{i,j}, not from
    a simulated value.
    """
    n = C.shape[0]
    f, s2 = to_ct_arrays(p.F, p.Sigma2)
    nxt = []
    for j in range(1, n):
        a = C[: n - j, j - 1]
        nxt.append(sample_steps(np.broadcast_to(a, (B, n - j)), f[j - 1], s2[j - 1], 1.0, rng, growth=p.F[j - 1]))
    return reestimate(C, nxt)


def _ct_block(C, diag, p: DevParams, cfg, B, rng):
    Fm, S2m = ct_parameter_draws(C, p, B, rng)
    R = simulate_reserves(diag, _ct_step(Fm, S2m, rng), B)
    return R, np.zeros(B, dtype=bool), 0


def pearson_residuals(t: Triangle, p: DevParams) -> np.ndarray:
    """Unadjusted Pearson residuals over observed transitions with Sigma_j > 0."""
    n = t.n
    C = t.values
    pool = []
    for j in range(1, n):
        if p.Sigma2[j - 1] <= 0:
            continue
        a = C[: n - j, j - 1]
        b = C[: n - j, j]
        pool.append((b - p.F[j - 1] * a) / (np.sqrt(p.Sigma2[j - 1]) * np.sqrt(a)))
    return np.concatenate(pool) if pool else np.empty(0)


def _finish_gaussian(C, diag, Fm, S2m, B, rng, tracker):
    R = simulate_reserves(diag, _gaussian_step(Fm, S2m, rng, tracker), B)
    return R, tracker.touched, tracker.clamped


def _mack_block(C, diag, p: DevParams, cfg, B, rng, pool):
    n = C.shape[0]
    tracker = _NegTracker(B)
    nxt = []
    for j in range(1, n):
        a = C[: n - j, j - 1]
        r = pool[rng.integers(0, len(pool), size=(B, n - j))]
        nxt.append(p.F[j - 1] * a + np.sqrt(p.Sigma2[j - 1] * a) * r)
    Fm, S2m = reestimate(C, nxt)
    return _finish_gaussian(C, diag, Fm, S2m, B, rng, tracker)


def _ts_block(C, diag, p: DevParams, cfg, B, rng):
    n = C.shape[0]
    tracker = _NegTracker(B)
    if cfg.ts_param_mode == "resample":
        nxt = []
        for j in range(1, n):
            a = C[: n - j, j - 1]
            Z = rng.standard_normal((B, n - j))
            nxt.append(p.F[j - 1] * a + np.sqrt(p.Sigma2[j - 1] * a) * Z)
        Fm, S2m = reestimate(C, nxt)
    else:
        colsum = np.array([C[: n - j, j - 1].sum() for j in range(1, n)])
        Fm = p.F + np.sqrt(p.Sigma2 / colsum) * rng.standard_normal((B, n - 1))
        S2m = np.empty((B, n - 1))
        dof = np.arange(n - 2, 0, -1)  # n - j - 1 for j = 1..n-2
        S2m[:, : n - 2] = p.Sigma2[: n - 2] * rng.chisquare(dof, size=(B, n - 2)) / dof
        S2m[:, n - 2] = tail_rule(S2m[:, : n - 2])
    return _finish_gaussian(C, diag, Fm, S2m, B, rng, tracker)


def _run(t: Triangle, cfg: BootstrapConfig, kernel) -> BootstrapResult:
    C = np.asarray(t.values)
    diag = t.latest_diagonal()
    sizes = [min(cfg.block_size, cfg.M - s) for s in range(0, cfg.M, cfg.block_size)]

    def run_block(b):
        return kernel(C, diag, sizes[b], block_rng(cfg.seed, b))

    if cfg.threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(run_block, range(len(sizes))))
    else:
        parts = [run_block(b) for b in range(len(sizes))]

    R = np.concatenate([p[0] for p in parts])
    touched = np.concatenate([p[1] for p in parts])
    clamped = sum(p[2] for p in parts)
    neg = int(touched.sum())
    if cfg.neg_policy == "drop_replicate":
        samples, dropped, clamped = R[~touched], neg, 0
    else:
        samples, dropped = R, 0
    R_hat = ultimates_and_reserve(t, estimate(t).F).total
    logger.debug("%s bootstrap: M=%d negative replicates=%d", cfg.method, cfg.M, neg)
    return BootstrapResult(
        samples=samples,
        dropped=dropped,
        zero_clamped=clamped,
        config=cfg,
        negative_replicates=neg,
        R_hat=R_hat,
    )


def run_ct_bootstrap(t: Triangle, cfg: BootstrapConfig) -> BootstrapResult:
    if cfg.method != "ct":
        raise ConfigError(f"config method is {cfg.method!r}, expected 'ct'")
    p = estimate(t)
    return _run(t, cfg, lambda C, diag, B, rng: _ct_block(C, diag, p, cfg, B, rng))


def run_mack_bootstrap(t: Triangle, cfg: BootstrapConfig) -> BootstrapResult:
    if cfg.method != "mack_residual":
        raise ConfigError(f"config method is {cfg.method!r}, expected 'mack_residual'")
    p = estimate(t)
    pool = pearson_residuals(t, p)
    if pool.size == 0:
        raise ConfigError("no Pearson residuals: every variance parameter is zero")
    return _run(t, cfg, lambda C, diag, B, rng: _mack_block(C, diag, p, cfg, B, rng, pool))


def run_ts_bootstrap(t: Triangle, cfg: BootstrapConfig) -> BootstrapResult:
    if cfg.method != "time_series":
        raise ConfigError(f"config method is {cfg.method!r}, expected 'time_series'")
    p = estimate(t)
    return _run(t, cfg, lambda C, diag, B, rng: _ts_block(C, diag, p, cfg, B, rng))


RUNNERS = {"ct": run_ct_bootstrap, "mack_residual": run_mack_bootstrap, "time_series": run_ts_bootstrap}


def run_bootstrap(t: Triangle, cfg: BootstrapConfig) -> BootstrapResult:
    return RUNNERS[cfg.method](t, cfg)


def fit_parametric(t: Triangle, family: str = "lognormal") -> ParametricReserve:
    """Moment-match a Log-normal or Gamma law to (R_hat, Mack MSEP).

    lognormal: log-variance s2 = log(1 + var / mean^2), log-location log(mean) - s2 / 2
    gamma:     shape mean^2 / var, rate mean / var
    """
    p = estimate(t)
    mu = ultimates_and_reserve(t, p.F).total
    var = mack_msep(t, p).total
    if family not in ("lognormal", "gamma"):
        raise ValueError(f"unknown family {family!r}")
    if var == 0.0:
        return ParametricReserve(family=family, mu_R=mu, sigma2_R=0.0, params={"point": mu})
    if mu <= 0:
        raise ValueError("moment matching needs a positive reserve")
    if family == "lognormal":
        s2 = float(np.log1p(var / mu**2))
        params = {"mu_log": float(np.log(mu) - s2 / 2), "sigma2_log": s2}
    else:
        params = {"shape": mu**2 / var, "rate": mu / var}
    return ParametricReserve(family=family, mu_R=mu, sigma2_R=var, params=params)
