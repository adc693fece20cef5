"""Independent reference computations used to freeze expected values.

Plain Python over ragged lists, deliberately sharing no code with the
package.
"""

import math

from scipy import integrate


def cl_oracle(rows):
    """Straight-line chain ladder over ragged rows.

    Returns (F, Sigma2 for j <= n-2, ultimates, reserve).
    """
    n = len(rows)
    F, S2 = [], []
    for j in range(n - 1):
        num = den = 0.0
        for i in range(n - j - 1):
            num += rows[i][j + 1]
            den += rows[i][j]
        F.append(num / den)
    for j in range(n - 2):
        acc = 0.0
        for i in range(n - j - 1):
            acc += rows[i][j] * (rows[i][j + 1] / rows[i][j] - F[j]) ** 2
        S2.append(acc / (n - j - 2))
    ult, R = [], 0.0
    for i in range(n):
        c = rows[i][-1]
        u = c
        for k in range(len(rows[i]) - 1, n - 1):
            u *= F[k]
        ult.append(u)
        R += u - c
    return F, S2, ult, R


def min_rule_oracle(S2):
    a, b = math.sqrt(S2[-2]), math.sqrt(S2[-1])
    return min(b * b / a, a, b) ** 2


def variance_by_quadrature(C, f, sigma2, dt):
    """C * int_0^dt sigma^2 exp(f u + 2 f (dt - u)) du."""
    val, _ = integrate.quad(lambda u: sigma2 * math.exp(f * u + 2 * f * (dt - u)), 0.0, dt, epsabs=0, epsrel=1e-13)
    return C * val


def two_step_moments(C, F1, F2, S1, S2):
    """Tower property over two Mack steps: E = F2 F1 C, Var = F2^2 S1 C + S2 F1 C."""
    mean = F2 * F1 * C
    var = F2**2 * S1 * C + S2 * (F1 * C)
    return mean, var
