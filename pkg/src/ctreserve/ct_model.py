"""Square-root (Feller) diffusion with yearly piecewise-constant coefficients.

    dC_t = f_j C_t dt + sigma_j sqrt(C_t) dW_t,    t in [j, j + 1)

Over a horizon dt <= 1 inside one development year the transition law is
compound Poisson-exponential: with

    beta   = 2 f / (sigma^2 (e^{f dt} - 1))
    lambda = beta e^{f dt} C

C_{j+dt} has the law of S = X_1 + ... + X_N, N ~ Poisson(lambda),
X_k ~ Exp(beta) i.i.d. Given N, S ~ Gamma(shape=N, rate=beta), so
transitions are sampled exactly with one Poisson and one Gamma draw.

All formulas are written through ``expm1(x) / x`` so that f -> 0 needs no
special branch; below |x| = 1e-8 that ratio switches to its series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ctreserve.chain_ladder import DevParams

SERIES_CUTOFF = 1e-8


def _phi(x):
    """(e^x - 1) / x with the removable singularity at 0 filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 + x / 2.0 + x * x / 6.0, np.expm1(safe) / safe)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CtParams:
    """Drift f_j and diffusion sigma^2_j per development year (0-based storage)."""

    f: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        s = np.asarray(self.sigma2, dtype=float)
        if f.shape != s.shape:
            raise ValueError("f and sigma2 must have equal shapes")
        if np.any(s < 0):
            raise ValueError("sigma2 must be >= 0")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "sigma2", s)


@dataclass(frozen=True)
class TransitionLaw:
    """Compound Poisson(lambda) sum of Exp(beta) jumps; Gamma rate convention (mean N / beta)."""

    lam: float
    beta: float
    horizon: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    @property
    def mean(self) -> float:
        return self.lam / self.beta

    @property
    def variance(self) -> float:
        return 2.0 * self.lam / self.beta**2

    @property
    def p_zero(self) -> float:
        return float(np.exp(-self.lam))


def to_ct_arrays(F, Sigma2):
    """Vectorised (F, Sigma^2) -> (f, sigma^2); works on any broadcastable shapes."""
    F = np.asarray(F, dtype=float)
    f = np.log(F)
    # Sigma^2 = sigma^2 e^f (e^f - 1) / f
    s2 = np.asarray(Sigma2, dtype=float) / (np.exp(f) * _phi(f))
    return f, s2


def from_ct_arrays(f, sigma2):
    f = np.asarray(f, dtype=float)
    return np.exp(f), np.asarray(sigma2, dtype=float) * np.exp(f) * _phi(f)


def to_ct(p: DevParams) -> CtParams:
    f, s2 = to_ct_arrays(p.F, p.Sigma2)
    return CtParams(f=f, sigma2=s2)


def from_ct(c: CtParams, tail_flag: bool = False) -> DevParams:
    F, S2 = from_ct_arrays(c.f, c.sigma2)
    return DevParams(F=F, Sigma2=S2, tail_flag=tail_flag)


def _check_dt(dt):
    if not 0 < dt <= 1:
        raise ValueError(f"horizon must lie in (0, 1], got {dt}")


def cond_moments(C_s: float, f: float, sigma2: float, dt: float = 1.0) -> tuple[float, float]:
    """Conditional mean and variance of C_{s+dt} given C_s inside one development year."""
    _check_dt(dt)
    g = np.exp(f * dt)
    mean = C_s * g
    # sigma^2 (e^{2 f dt} - e^{f dt}) / f
    var = C_s * sigma2 * dt * g * _phi(f * dt)
    return float(mean), float(var)


def _dispersion(f: float, sigma2: float, dt: float) -> float:
    """sigma^2 (e^{f dt} - 1) / f, i.e. 2 / beta."""
    return sigma2 * dt * _phi(f * dt)


def laplace(z: float, C_j: float, f: float, sigma2: float, dt: float = 1.0) -> float:
    """E[exp(-z C_{j+dt}) | C_j]."""
    _check_dt(dt)
    d = _dispersion(f, sigma2, dt)
    denom = 2.0 + d * z
    if denom <= 0:
        raise ValueError(f"z={z} outside the domain z > {-2.0 / d}")
    with np.errstate(over="ignore"):
        # diverges (inf) as z approaches the domain edge from above
        return float(np.exp(-2.0 * np.exp(f * dt) * C_j * z / denom))


def prob_zero(C_j: float, f: float, sigma2: float, dt: float = 1.0) -> float:
    """P(C_{j+dt} = 0 | C_j), the limit of :func:`laplace` as z -> infinity."""
    _check_dt(dt)
    if C_j == 0:
        return 1.0
    if sigma2 == 0:
        return 0.0
    return float(np.exp(-log_prob_zero_exponent(C_j, f, sigma2, dt)))


def log_prob_zero_exponent(C_j: float, f: float, sigma2: float, dt: float = 1.0) -> float:
    """lambda = -log P(C_{j+dt} = 0 | C_j); useful when the probability underflows."""
    return float(2.0 * np.exp(f * dt) * C_j / _dispersion(f, sigma2, dt))


def transition_law(C_j: float, f: float, sigma2: float, dt: float = 1.0) -> TransitionLaw:
    _check_dt(dt)
    if sigma2 <= 0:
        raise ValueError("transition law needs sigma2 > 0; sigma2 == 0 is a deterministic step")
    if C_j < 0:
        raise ValueError("C_j must be >= 0")
    beta = 2.0 / _dispersion(f, sigma2, dt)
    return TransitionLaw(lam=float(beta * np.exp(f * dt) * C_j), beta=float(beta), horizon=dt)


def sample_transition(law: TransitionLaw, rng: np.random.Generator, size=None):
    """Exact draw(s): N ~ Poisson(lambda), then Gamma(shape=N, rate=beta), 0 when N = 0."""
    N = _poisson(np.broadcast_to(np.asarray(law.lam, dtype=float), () if size is None else size), rng)
    return rng.standard_gamma(N) / law.beta if size is not None else float(rng.standard_gamma(N) / law.beta)


def sample_steps(C, f, sigma2, dt, rng: np.random.Generator, growth=None) -> np.ndarray:
    """Vectorised exact transitions for broadcastable (C, f, sigma2).

    Entries with sigma2 == 0 move deterministically to C e^{f dt}; pass
    ``growth`` (= e^{f dt}, e.g. the development factor itself) to avoid the
    log/exp round trip on that path. One
    Poisson and one Gamma variate are consumed per entry whatever the
    parameters, so the stream position depends only on the output shape.
    """
    C, f, sigma2 = np.broadcast_arrays(
        np.asarray(C, dtype=float), np.asarray(f, dtype=float), np.asarray(sigma2, dtype=float)
    )
    mean = C * (np.exp(f * dt) if growth is None else growth)
    live = (sigma2 > 0) & (C > 0)
    d = np.where(live, sigma2 * dt * _phi(f * dt), 1.0)
    beta = 2.0 / d
    lam = np.where(live, beta * mean, 0.0)
    N = _poisson(lam, rng)
    S = rng.standard_gamma(N) / beta
    return np.where(live, S, mean)


# numpy's PTRS Poisson and BTPE binomial samplers are limited to int64 counts
COUNT_CAP = 1e17


def _poisson(lam: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Poisson counts as floats, exact for any lambda.

    Above the cap lambda is reduced with the Gamma/binomial recursion of
    Ahrens & Dieter. Huge lambda shows up when a bootstrap replicate
    estimates a near-zero variance (an almost deterministic transition).
    """
    lam = np.asarray(lam, dtype=float)
    big = lam > COUNT_CAP
    N = np.asarray(rng.poisson(np.where(big, 0.0, lam)), dtype=float).reshape(lam.shape)
    if big.any():
        flat, lam_flat = N.reshape(-1), lam.reshape(-1)
        for k in np.flatnonzero(big):
            flat[k] = _poisson_large(float(lam_flat[k]), rng)
    return N


def _poisson_large(lam: float, rng: np.random.Generator) -> float:
    n = 0.0
    while lam > COUNT_CAP:
        m = np.floor(0.875 * lam)
        x = rng.standard_gamma(m)
        if x >= lam:
            # the m-th arrival of a unit-rate process falls after lam
            return n + _binomial(m - 1.0, lam / x, rng)
        n += m
        lam -= x
    return n + float(rng.poisson(lam))


def _binomial(trials: float, p: float, rng: np.random.Generator) -> float:
    """Binomial(trials, p) for float-valued trial counts beyond int64."""
    k = 0.0
    while trials > COUNT_CAP:
        a = np.floor(trials / 2.0) + 1.0
        y = rng.beta(a, trials + 1.0 - a)
        if y >= p:
            trials, p = a - 1.0, p / y
        else:
            k += a
            trials, p = trials - a, (p - y) / (1.0 - y)
    return k + float(rng.binomial(int(trials), min(max(p, 0.0), 1.0)))
