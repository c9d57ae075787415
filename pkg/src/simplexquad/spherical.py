"""Change of variables between the probability simplex and an angle box.

A point of the n-bin simplex is parametrized by n-1 angles, each in
[0, pi/2]:

    p_1 = cos^2 t_1
    p_i = sin^2 t_1 * ... * sin^2 t_{i-1} * cos^2 t_i      (1 < i < n)
    p_n = sin^2 t_1 * ... * sin^2 t_{n-1}

These are squared spherical coordinates on the unit sphere's positive
orthant, so p_i >= 0 and sum p_i = 1 hold by construction and integrals
over the awkward simplex domain become integrals over a rectangular
box. The Jacobian matrix dp_i/dt_j of the map is lower triangular,
hence its determinant is just the product of the diagonal entries;
log_jacobian evaluates that product in log space.

For a power-product integrand prod p_i^{m_i} the full transformed
integrand (powers times Jacobian) separates into one factor per angle,
K_j; see log_kernel. Each factor integrates to a Beta function on its
own, which is what makes the closed-form moments possible.

angles_to_simplex and log_jacobian accept batches: a leading axis of
angle vectors is mapped elementwise.
"""

import math

import numpy as np

__all__ = [
    "HALF_PI",
    "angles_to_simplex",
    "simplex_to_angles",
    "log_jacobian",
    "log_kernel",
]

HALF_PI = math.pi / 2.0
_LN2 = math.log(2.0)


def _check_angles(theta):
    if theta.ndim < 1 or theta.shape[-1] < 1:
        raise ValueError("an angle vector needs at least one component (n >= 2 bins)")
    if not np.all(np.isfinite(theta)):
        raise ValueError("angles must be finite")
    if np.any(theta < 0.0) or np.any(theta > HALF_PI):
        raise ValueError("angles must lie in [0, pi/2]")


def _check_exponents(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 1 or m.size < 2:
        raise ValueError("exponent vector must be 1-D with at least two bins")
    if not np.all(np.isfinite(m)) or np.any(m <= -1.0):
        raise ValueError("every exponent must be a finite value > -1")
    return m


def _xlogy(y, x):
    # y * log(x) with the 0 * log(0) = 0 convention: a zero exponent
    # removes the factor entirely, whatever the base.
    with np.errstate(divide="ignore", invalid="ignore"):
        out = y * np.log(x)
    return np.where(np.asarray(y) == 0.0, 0.0, out)


def angles_to_simplex(theta):
    """Map angles in [0, pi/2]^(n-1) to a point of the n-bin simplex.

    Parameters
    ----------
    theta : array_like, shape (..., n-1)
        One angle vector, or any batch of them along leading axes.

    Returns
    -------
    ndarray, shape (..., n)
        Probability vectors; components are nonnegative and sum to 1
        up to roundoff (no renormalization is applied).
    """
    theta = np.asarray(theta, dtype=float)
    _check_angles(theta)
    s2 = np.square(np.sin(theta))
    c2 = np.square(np.cos(theta))
    tail = np.cumprod(s2, axis=-1)
    lead = np.concatenate(
        [np.ones(theta.shape[:-1] + (1,)), tail[..., :-1]], axis=-1
    )
    return np.concatenate([lead * c2, tail[..., -1:]], axis=-1)


def simplex_to_angles(p):
    """Invert angles_to_simplex for a single simplex point.

    theta_i = arccos(sqrt(p_i / r_i)) where r_i is the mass not yet
    assigned by bins 1..i-1. Once r_i hits zero the remaining angles
    are pi/2 by convention; that keeps the forward map exact (all
    remaining bins get probability zero), so the boundary is not an
    error.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("simplex_to_angles expects a single probability vector")
    if p.size < 2:
        raise ValueError("a simplex point needs at least two bins")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise ValueError("probabilities must be finite and nonnegative")
    if abs(float(np.sum(p)) - 1.0) > 1e-12:
        raise ValueError("probabilities must sum to 1 within 1e-12")

    n = p.size
    theta = np.empty(n - 1)
    # unassigned mass as a suffix sum, not 1 minus a prefix sum: the
    # subtraction form cancels catastrophically once the tail is tiny
    # and would cost ~7 digits of the late angles
    remaining = np.cumsum(p[::-1])[::-1]
    for i in range(n - 1):
        if remaining[i] <= 0.0:
            theta[i:] = HALF_PI
            break
        ratio = p[i] / remaining[i]
        # clamp rounding spill just past the ends of [0, 1]
        ratio = min(max(ratio, 0.0), 1.0)
        theta[i] = math.acos(math.sqrt(ratio))
    return theta


def log_jacobian(theta):
    """Return ln of the Jacobian determinant of theta -> (p_1..p_{n-1}).

    Lower triangularity reduces the determinant to the diagonal
    product

        J = prod_{i=1}^{n-1} 2 sin(t_i) cos(t_i) * sin(t_i)^{2(n-1-i)}

    evaluated here as a sum of logs. Returns negative infinity where a
    factor vanishes exactly, which happens at an angle of 0 (sin(0) is
    an exact float zero). At the float pi/2 the cosine is ~6.1e-17
    rather than 0, so the result there is finite but far below any
    interior value.

    Accepts a single angle vector (returns a float) or a batch with
    leading axes (returns an array of that leading shape).
    """
    theta = np.asarray(theta, dtype=float)
    _check_angles(theta)
    n = theta.shape[-1] + 1
    s = np.sin(theta)
    c = np.cos(theta)
    with np.errstate(divide="ignore"):
        out = np.sum(np.log(2.0 * s * c), axis=-1)
        if n > 2:
            # exponents 2(n-1-i) are zero on the last axis, so only the
            # first n-2 axes contribute; keeping the zero-coefficient
            # term out avoids 0 * (-inf) at boundary angles
            coef = 2.0 * np.arange(n - 2, 0, -1, dtype=float)
            out = out + np.sum(coef * np.log(s[..., :-1]), axis=-1)
    if out.ndim == 0:
        return float(out)
    return out


def log_kernel(j, n, m, theta_j):
    """Log of the separated per-angle factor K_j at angle theta_j.

    K_j(t) = 2 cos^{2(m_j+1)-1}(t) sin^{2 S_j - 1}(t) with
    S_j = sum_{l=j+1}^{n} (m_l + 1). The product of K_j over
    j = 1..n-1 equals prod p_i^{m_i} times the Jacobian, so each angle
    integrates independently:

        int_0^{pi/2} K_j(t) dt = B(m_j + 1, S_j)

    and the product of those Beta values telescopes to the closed-form
    normalization integral.

    Parameters
    ----------
    j : int
        1-based angle index, 1 <= j <= n-1.
    n : int
        Number of bins; must equal len(m).
    m : array_like
        Exponent vector, each entry > -1.
    theta_j : float or array_like
        Angle(s) in [0, pi/2].

    Returns
    -------
    float or ndarray
        ln K_j; -inf at boundary zeros of the kernel, +inf where a
        negative power (m_j < -1/2 at the cos end, say) diverges.
    """
    m = _check_exponents(m)
    if n != m.size:
        raise ValueError(f"n={n} does not match len(m)={m.size}")
    if not 1 <= j <= n - 1:
        raise IndexError(f"kernel index must satisfy 1 <= j <= n-1, got j={j}")
    t = np.asarray(theta_j, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(t < 0.0) or np.any(t > HALF_PI):
        raise ValueError("angles must lie in [0, pi/2]")

    cos_exp = 2.0 * (m[j - 1] + 1.0) - 1.0
    sin_exp = 2.0 * float(np.sum(m[j:] + 1.0)) - 1.0
    out = _LN2 + _xlogy(cos_exp, np.cos(t)) + _xlogy(sin_exp, np.sin(t))
    if out.ndim == 0:
        return float(out)
    return out
