"""Closed-form posterior moments of multinomial bin probabilities.

With observed counts m_1..m_n and a constant prior, the posterior over
the bin probabilities is Dirichlet, density proportional to
prod p_i^{m_i} on the simplex. Its normalization integral is

    I_n = prod_i Gamma(m_i + 1) / Gamma(sum_i (m_i + 1))

which for integer counts reads prod_i m_i! / (N + n - 1)! with
N = sum m_i. Every moment E[prod p_i^{a_i}] is a ratio of two such
integrals, I(m + a) / I(m), so all arithmetic happens on logarithms
and counts in the thousands neither overflow nor lose the ratio.

Non-integer counts are fine everywhere (they arise from fractional
pseudo-counts); each m_i only has to stay above -1 so that the Gamma
arguments stay positive.

Bin indices in this module are 1-based, matching the p1, p2, ...
naming used by the expression language and the command line.
"""

import math

import numpy as np

from .special import log_gamma

__all__ = [
    "as_exponent_vector",
    "log_norm_integral",
    "moment",
    "mean",
    "means",
    "second_moment",
    "variance",
    "std_dev",
    "skewness",
    "covariance",
]


def as_exponent_vector(m):
    """Validate counts/exponents: a 1-D vector, n >= 2, every entry > -1."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 1 or m.size < 2:
        raise ValueError("counts must form a 1-D vector with at least two bins")
    if not np.all(np.isfinite(m)) or np.any(m <= -1.0):
        raise ValueError("every count must be a finite value > -1")
    return m


def _bin_index(i, n):
    if not float(i).is_integer() or not 1 <= int(i) <= n:
        raise IndexError(f"bin index must be an integer in 1..{n}, got {i!r}")
    return int(i) - 1


def log_norm_integral(m) -> float:
    """Return ln I_n for counts m, the log of int prod p_i^{m_i} dp.

    I_n = prod Gamma(m_i + 1) / Gamma(sum (m_i + 1)); for integer
    counts this is prod m_i! / (N + n - 1)!.
    """
    m = as_exponent_vector(m)
    args = m + 1.0
    return math.fsum(log_gamma(a) for a in args) - log_gamma(math.fsum(args))


def moment(m, idx) -> float:
    """Return E[prod_i p_i^{a_i}] for the multi-index a = idx.

    Computed as exp(ln I(m + a) - ln I(m)): raising bin i's count by
    a_i and renormalizing is the same thing as weighting by p_i^{a_i}.
    Entries of idx may be any reals with m_i + a_i > -1; a_i = q with
    zeros elsewhere gives the q-th marginal moment of bin i.
    """
    m = as_exponent_vector(m)
    a = np.asarray(idx, dtype=float)
    if a.shape != m.shape:
        raise ValueError(
            f"moment index has {a.size} entries for {m.size} bins"
        )
    if not np.all(np.isfinite(a)):
        raise ValueError("moment index entries must be finite")
    if np.any(m + a <= -1.0):
        raise ValueError("every shifted count m_i + a_i must stay > -1")
    return math.exp(log_norm_integral(m + a) - log_norm_integral(m))


def _total(m) -> float:
    # N + n, the normalizing total behind every closed-form moment
    return math.fsum(m) + m.size


def mean(m, i) -> float:
    """Posterior mean of bin i: (m_i + 1) / (N + n), N = sum m_j."""
    m = as_exponent_vector(m)
    i = _bin_index(i, m.size)
    return (m[i] + 1.0) / _total(m)


def means(m):
    """All n posterior means at once; they sum to 1 by construction."""
    m = as_exponent_vector(m)
    return (m + 1.0) / _total(m)


def second_moment(m, i) -> float:
    """E[p_i^2] = (m_i + 2)(m_i + 1) / ((N + n + 1)(N + n))."""
    m = as_exponent_vector(m)
    i = _bin_index(i, m.size)
    t = _total(m)
    return (m[i] + 2.0) * (m[i] + 1.0) / ((t + 1.0) * t)


def variance(m, i) -> float:
    """Posterior variance of bin i, in closed form.

    var p_i = (m_i + 1)(N + n - m_i - 1) / ((N + n)^2 (N + n + 1)),
    which is E[p_i^2] - E[p_i]^2 with the cancellation done
    symbolically.
    """
    m = as_exponent_vector(m)
    i = _bin_index(i, m.size)
    t = _total(m)
    return (m[i] + 1.0) * (t - m[i] - 1.0) / (t * t * (t + 1.0))


def std_dev(m, i) -> float:
    """Posterior standard deviation of bin i: sqrt(variance)."""
    return math.sqrt(variance(m, i))


def skewness(m, i) -> float:
    """Posterior skewness of bin i.

    mu_3 / var^{3/2} with the central third moment assembled from raw
    moments: mu_3 = E[p^3] - 3 E[p^2] E[p] + 2 E[p]^3. Zero for
    symmetric marginals; positive means a tail toward larger p_i.
    """
    m = as_exponent_vector(m)
    i0 = _bin_index(i, m.size)
    e = []
    for q in (1.0, 2.0, 3.0):
        a = np.zeros(m.size)
        a[i0] = q
        e.append(moment(m, a))
    e1, e2, e3 = e
    mu3 = e3 - 3.0 * e2 * e1 + 2.0 * e1 ** 3
    return mu3 / variance(m, i) ** 1.5


def covariance(m, i, j) -> float:
    """Posterior covariance of bins i and j.

    E[p_i p_j] - E[p_i] E[p_j], with the cross moment as a ratio of
    normalization integrals. Negative for i != j: the bins compete for
    the same unit of probability. covariance(m, i, i) is variance.
    """
    m = as_exponent_vector(m)
    i0 = _bin_index(i, m.size)
    j0 = _bin_index(j, m.size)
    if i0 == j0:
        return variance(m, i)
    a = np.zeros(m.size)
    a[i0] = 1.0
    a[j0] = 1.0
    return moment(m, a) - mean(m, i) * mean(m, j)
