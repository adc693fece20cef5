"""Chain-ladder point estimates and Mack's conditional MSEP."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ctreserve.triangle import Triangle


@dataclass(frozen=True)
class DevParams:
    """Development factors F_j and variance parameters Sigma^2_j, j = 1..n-1.

    Stored 0-based: ``F[j - 1]`` is F_j.
    """

    F: np.ndarray
    Sigma2: np.ndarray
    tail_flag: bool = False

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        S = np.asarray(self.Sigma2, dtype=float)
        if F.shape != S.shape or F.ndim != 1:
            raise ValueError("F and Sigma2 must be 1-d arrays of equal length")
        if np.any(F <= 0):
            raise ValueError("development factors must be > 0")
        if np.any(S < 0):
            raise ValueError("variance parameters must be >= 0")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "Sigma2", S)

    @property
    def n(self) -> int:
        return len(self.F) + 1


@dataclass(frozen=True)
class ReserveSummary:
    ultimates: np.ndarray
    reserves: np.ndarray
    total: float


@dataclass(frozen=True)
class MsepResult:
    per_year: np.ndarray
    total: float

    @property
    def se(self) -> float:
        return float(np.sqrt(self.total))


def dev_factors(t: Triangle) -> np.ndarray:
    """Volume-weighted factors: ratio of column sums over the rows observed in both columns."""
    n = t.n
    C = t.values
    return np.array([C[: n - j, j].sum() / C[: n - j, j - 1].sum() for j in range(1, n)])


def sigma2(t: Triangle, F: np.ndarray) -> np.ndarray:
    """Sigma^2_j for j = 1..n-2 (the last one is not estimable from data)."""
    n = t.n
    C = t.values
    out = np.empty(n - 2)
    for j in range(1, n - 1):
        a = C[: n - j, j - 1]
        b = C[: n - j, j]
        out[j - 1] = np.sum(a * (b / a - F[j - 1]) ** 2) / (n - j - 1)
    return out


def tail_sigma2(Sigma2) -> float:
    """Mack's extrapolation for the last variance parameter.

    Works on standard deviations: min(s_{n-2}^2 / s_{n-3}, s_{n-3}, s_{n-2}),
    returned squared. A zero s_{n-3} gives 0 with a warning.
    """
    s2 = np.asarray(Sigma2, dtype=float)
    if len(s2) < 2:
        raise ValueError("tail rule needs the two trailing variance parameters (n >= 4)")
    if np.any(s2 < 0):
        raise ValueError("variance parameters must be >= 0")
    s_prev, s_last = np.sqrt(s2[-2]), np.sqrt(s2[-1])
    if s_prev == 0.0:
        warnings.warn("tail rule degenerate (zero variance two columns from the end); using 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(min(s_last**2 / s_prev, s_prev, s_last) ** 2)


def estimate(t: Triangle) -> DevParams:
    """F_j and Sigma^2_j for every j, the last variance from :func:`tail_sigma2`."""
    F = dev_factors(t)
    s2 = sigma2(t, F)
    if t.n >= 4:
        tail = tail_sigma2(s2)
    else:
        # one estimable variance only; carry it over
        tail = float(s2[-1])
    return DevParams(F=F, Sigma2=np.append(s2, tail), tail_flag=True)


def _forecasts(t: Triangle, F: np.ndarray) -> np.ndarray:
    """Completed triangle: observed cells kept, lower part chained with F."""
    n = t.n
    full = np.array(t.values, dtype=float)
    for i in range(n):
        for k in range(n - i, n):
            full[i, k] = full[i, k - 1] * F[k - 1]
    return full


def ultimates_and_reserve(t: Triangle, F: np.ndarray) -> ReserveSummary:
    full = _forecasts(t, np.asarray(F, dtype=float))
    ult = full[:, -1].copy()
    res = ult - t.latest_diagonal()
    return ReserveSummary(ultimates=ult, reserves=res, total=float(res.sum()))


def mack_msep(t: Triangle, p: DevParams) -> MsepResult:
    """Mack (1993) conditional MSEP of the ultimates and of the total reserve.

    per year:  U_i^2 * sum_k Sigma2_k / F_k^2 * (1 / C_hat_{i,k} + 1 / S_k)
    total:     sum of the above plus
               2 * U_i * sum_{l > i} U_l * sum_k Sigma2_k / F_k^2 / S_k
    where S_k is the column sum of the k-th development year over the rows
    used to estimate F_k.
    """
    n = t.n
    F, S2 = p.F, p.Sigma2
    full = _forecasts(t, F)
    ult = full[:, -1]
    colsum = np.array([t.values[: n - k, k - 1].sum() for k in range(1, n)])
    per_year = np.zeros(n)
    param = np.zeros(n)
    for i in range(2, n + 1):
        ks = np.arange(n - i + 1, n)  # 1-based k
        w = S2[ks - 1] / F[ks - 1] ** 2
        per_year[i - 1] = ult[i - 1] ** 2 * np.sum(w * (1.0 / full[i - 1, ks - 1] + 1.0 / colsum[ks - 1]))
        param[i - 1] = np.sum(2.0 * w / colsum[ks - 1])
    total = per_year.sum()
    for i in range(2, n + 1):
        total += ult[i - 1] * ult[i:].sum() * param[i - 1]
    return MsepResult(per_year=per_year, total=float(total))


def propagate_moments(C_s: float, s: int, j: int, p: DevParams) -> tuple[float, float]:
    """Conditional mean and variance of C_j given C_s (development indices 1-based)."""
    n = p.n
    if not (1 <= s <= j <= n):
        raise IndexError(f"need 1 <= s <= j <= {n}, got s={s}, j={j}")
    F, S2 = p.F, p.Sigma2
    mean = float(np.prod(F[s - 1 : j - 1])) * C_s
    var = 0.0
    for k in range(s, j):
        var += np.prod(F[k : j - 1] ** 2) * S2[k - 1] * np.prod(F[s - 1 : k - 1])
    return mean, float(var * C_s)
