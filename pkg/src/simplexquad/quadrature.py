"""Numerical integration over the probability simplex.

All schemes integrate int f(p) dp_1..dp_{n-1} over the simplex by
working in the angle box: p = p(theta), dp = J(theta) dtheta, with
theta ranging over [0, pi/2]^{n-1}. The integrand is smooth there
even when f has power-law behavior at the simplex boundary, which is
the whole point of the substitution.

Three schemes:

gauss_grid
    Tensor product of Gauss-Legendre rules, one axis per angle.
    Deterministic and rapidly convergent for smooth f.
monte_carlo
    Uniform sampling of the angle box, weighted by the Jacobian and
    the box volume. Uniform in theta is intentionally NOT uniform on
    the simplex; the Jacobian is what corrects the distortion, so do
    not reuse these samples as simplex draws. Deterministic for a
    fixed seed: samples come in batches of 2^16 from a counter-based
    Philox generator keyed (seed, batch_index), and the reduction
    always runs in batch order, so any future parallel split over
    batches reproduces the serial result bit for bit.
nested_oracle
    Brute-force iterated integration in raw p coordinates (see the
    oracle module). Kept free of any shared code with the angle-based
    schemes so it can serve as independent ground truth.

Sums of integrand values accumulate in log space with a running max
shift: products of many bin powers underflow linear doubles long
before they stop being meaningful.
"""

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .moments import as_exponent_vector
from .oracle import IntegrationError, nested_simplex_integral
from .spherical import HALF_PI, angles_to_simplex, log_jacobian, log_kernel

__all__ = [
    "DEFAULT_EVAL_BUDGET",
    "BUDGET_ENV_VAR",
    "IntegrationError",
    "QuadratureSpec",
    "IntegralEstimate",
    "resolve_eval_budget",
    "gauss_legendre",
    "power_log_integrand",
    "integrate_simplex",
    "integrate_simplex_log",
    "integrate_separable",
    "nested_oracle",
]

DEFAULT_EVAL_BUDGET = 100_000_000
BUDGET_ENV_VAR = "SIMPLEXQUAD_EVAL_BUDGET"

_SCHEMES = ("gauss_grid", "monte_carlo", "nested_oracle")
_CHUNK = 1 << 18
_MC_BATCH = 1 << 16


def resolve_eval_budget(budget=None):
    """Effective evaluation cap: explicit argument, else the
    SIMPLEXQUAD_EVAL_BUDGET environment variable, else 1e8."""
    if budget is None:
        raw = os.environ.get(BUDGET_ENV_VAR)
        if raw is None or not raw.strip():
            return DEFAULT_EVAL_BUDGET
        try:
            budget = float(raw)
        except ValueError:
            raise ValueError(
                f"{BUDGET_ENV_VAR} must be a number, got {raw!r}"
            ) from None
    limit = int(budget)
    if limit <= 0:
        raise ValueError("evaluation budget must be positive")
    return limit


@dataclass(frozen=True)
class QuadratureSpec:
    """Which scheme to run and its knobs.

    Only the fields of the chosen scheme matter: nodes_per_axis for
    gauss_grid, samples and seed for monte_carlo, rel_tol for
    nested_oracle. The rest are ignored.
    """

    scheme: str
    nodes_per_axis: int = 32
    samples: int = 100_000
    seed: int = 0
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ValueError(
                f"scheme must be one of {_SCHEMES}, got {self.scheme!r}"
            )
        if self.scheme == "gauss_grid" and self.nodes_per_axis < 2:
            raise ValueError("nodes_per_axis must be at least 2")
        if self.scheme == "monte_carlo":
            if self.samples < 1:
                raise ValueError("samples must be at least 1")
            if not float(self.seed).is_integer():
                raise ValueError("seed must be an integer")
        if self.scheme == "nested_oracle" and not self.rel_tol > 0.0:
            raise ValueError("rel_tol must be positive")


@dataclass(frozen=True)
class IntegralEstimate:
    """An integral value in log form plus how it was obtained.

    std_error is a linear-scale 1-sigma estimate for monte_carlo and
    exactly 0.0 for the deterministic schemes.
    """

    log_value: float
    std_error: float
    evaluations: int
    scheme: str

    def __post_init__(self):
        if not self.std_error >= 0.0:
            raise ValueError("std_error must be nonnegative")
        if self.evaluations <= 0:
            raise ValueError("evaluations must be positive")
        # normalize numpy scalars so reports serialize cleanly
        object.__setattr__(self, "log_value", float(self.log_value))
        object.__setattr__(self, "std_error", float(self.std_error))
        object.__setattr__(self, "evaluations", int(self.evaluations))

    @property
    def value(self) -> float:
        """exp(log_value); inf if it overflows linear doubles."""
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf


def _legendre_pair(order, x):
    # recurrence k P_k = (2k-1) x P_{k-1} - (k-1) P_{k-2}
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, order + 1):
        p_prev, p = p, ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k
    return p, p_prev


@lru_cache(maxsize=None)
def _gauss_legendre_cached(count):
    # Newton iteration on P_count from the standard cosine initial
    # guesses; only the positive half is solved, the rest is mirrored,
    # which keeps the rule exactly symmetric.
    half = (count + 1) // 2
    k = np.arange(half)
    x = np.cos(np.pi * (k + 0.75) / (count + 0.5))
    for _ in range(100):
        p, p_prev = _legendre_pair(count, x)
        dp = count * (x * p - p_prev) / (x * x - 1.0)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:
        raise RuntimeError(f"Gauss-Legendre nodes for n={count} did not converge")
    if count % 2 == 1:
        x[-1] = 0.0
    p, p_prev = _legendre_pair(count, x)
    dp = count * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)

    skip = count % 2
    nodes = np.concatenate([-x, x[::-1][skip:]])
    if skip:
        nodes[half - 1] = 0.0
    weights = np.concatenate([w, w[::-1][skip:]])
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_legendre(count):
    """Nodes and weights of the count-point Gauss-Legendre rule on [-1, 1].

    Found by Newton root-polishing of the Legendre recurrence (no
    eigenvalue machinery), converged to a 1e-15 step size. Results are
    cached and returned as read-only arrays in ascending node order.
    """
    if count < 2:
        raise ValueError("a Gauss-Legendre rule needs at least 2 nodes")
    return _gauss_legendre_cached(int(count))


@lru_cache(maxsize=None)
def _angle_rule(count):
    # affine map of the [-1, 1] rule onto [0, pi/2]
    x, w = _gauss_legendre_cached(count)
    theta = (x + 1.0) * (math.pi / 4.0)
    weights = w * (math.pi / 4.0)
    log_weights = np.log(weights)
    theta.flags.writeable = False
    weights.flags.writeable = False
    log_weights.flags.writeable = False
    return theta, weights, log_weights


class _LogSumAccumulator:
    """Streaming log-sum-exp with a running max shift.

    Chunks are added in a fixed order and reduced with plain numpy
    sums, so results are bit-stable from run to run.
    """

    __slots__ = ("shift", "total")

    def __init__(self):
        self.shift = -math.inf
        self.total = 0.0

    def add(self, log_values):
        peak = float(np.max(log_values)) if log_values.size else -math.inf
        if peak == -math.inf:
            return
        if peak > self.shift:
            if self.total:
                self.total *= math.exp(self.shift - peak)
            self.shift = peak
        self.total += float(np.sum(np.exp(log_values - self.shift)))

    @property
    def log_sum(self):
        if self.total <= 0.0 or self.shift == -math.inf:
            return -math.inf
        return self.shift + math.log(self.total)


def _logsumexp(log_values):
    acc = _LogSumAccumulator()
    acc.add(np.asarray(log_values, dtype=float))
    return acc.log_sum


def power_log_integrand(m):
    """Vectorized log integrand for prod p_i^{m_i}.

    Zero exponents contribute nothing even at p_i = 0 (the 0^0 = 1
    convention), so boundary points do not produce NaNs.
    """
    m = as_exponent_vector(m)

    def log_f(points):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = m * np.log(points)
        terms = np.where(m == 0.0, 0.0, terms)
        return np.sum(terms, axis=-1)

    return log_f


def _checked_log_values(log_f, points, count):
    values = np.asarray(log_f(points), dtype=float)
    if values.shape != (count,):
        raise IntegrationError(
            "integrand must return one value per point "
            f"(expected shape {(count,)}, got {values.shape})"
        )
    if np.any(np.isnan(values)) or np.any(values == math.inf):
        raise IntegrationError("integrand evaluated to NaN or infinity")
    return values


def _check_bins(n):
    if not float(n).is_integer() or int(n) < 2:
        raise ValueError(f"bin count must be an integer >= 2, got {n!r}")
    return int(n)


def _gauss_grid(n, log_f, nodes, budget):
    total = nodes ** (n - 1)
    if total > budget:
        raise IntegrationError(
            f"gauss_grid with {nodes} nodes on {n - 1} axes needs {total} "
            f"evaluations, over the budget of {budget}"
        )
    theta, _, log_w = _angle_rule(nodes)
    dims = (nodes,) * (n - 1)
    acc = _LogSumAccumulator()
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        index = np.stack(np.unravel_index(flat, dims), axis=1)
        th = theta[index]
        logs = np.sum(log_w[index], axis=1)
        logs += log_jacobian(th)
        logs += _checked_log_values(log_f, angles_to_simplex(th), flat.size)
        acc.add(logs)
    return acc.log_sum, total


def _monte_carlo(n, log_f, samples, seed, budget):
    if samples > budget:
        raise IntegrationError(
            f"monte_carlo with {samples} samples is over the budget of {budget}"
        )
    log_cube = (n - 1) * math.log(HALF_PI)
    # two's-complement fold of the signed seed into the uint64 key word
    key_word = int(seed) & 0xFFFFFFFFFFFFFFFF
    acc_mean = _LogSumAccumulator()
    acc_square = _LogSumAccumulator()
    done = 0
    batch = 0
    while done < samples:
        count = min(_MC_BATCH, samples - done)
        key = np.array([key_word, batch], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        th = rng.random((count, n - 1)) * HALF_PI
        logs = log_jacobian(th) + log_cube
        logs += _checked_log_values(log_f, angles_to_simplex(th), count)
        acc_mean.add(logs)
        acc_square.add(2.0 * logs)
        done += count
        batch += 1

    log_samples = math.log(samples)
    log_mean = acc_mean.log_sum - log_samples
    if log_mean == -math.inf:
        return -math.inf, 0.0, samples
    log_second = acc_square.log_sum - log_samples
    gap = 2.0 * log_mean - log_second
    if gap >= 0.0:
        # mean^2 >= E[g^2] can only happen through roundoff
        std_error = 0.0
    else:
        log_variance = log_second + math.log1p(-math.exp(gap))
        std_error = math.exp(0.5 * (log_variance - log_samples))
    return log_mean, std_error, samples


def integrate_simplex_log(n, log_f, spec, budget=None):
    """Integrate exp(log_f(p)) over the simplex, log-domain integrand.

    log_f must be vectorized: it gets a (k, n) array of simplex points
    and returns k log values (-inf encodes an integrand zero). Use
    this instead of integrate_simplex when the integrand itself would
    underflow linear doubles.
    """
    n = _check_bins(n)
    if not isinstance(spec, QuadratureSpec):
        raise TypeError("spec must be a QuadratureSpec")
    limit = resolve_eval_budget(budget)
    if spec.scheme == "gauss_grid":
        log_value, evaluations = _gauss_grid(n, log_f, spec.nodes_per_axis, limit)
        return IntegralEstimate(log_value, 0.0, evaluations, spec.scheme)
    if spec.scheme == "monte_carlo":
        log_value, std_error, evaluations = _monte_carlo(
            n, log_f, spec.samples, spec.seed, limit
        )
        return IntegralEstimate(log_value, std_error, evaluations, spec.scheme)

    def f(p):
        row = np.asarray(p, dtype=float)[None, :]
        return float(np.exp(_checked_log_values(log_f, row, 1)[0]))

    value, evaluations = nested_simplex_integral(
        f, n=n, rel_tol=spec.rel_tol, max_evaluations=limit
    )
    log_value = math.log(value) if value > 0.0 else -math.inf
    return IntegralEstimate(log_value, 0.0, evaluations, spec.scheme)


def integrate_simplex(n, f, spec, budget=None, vectorized=False):
    """Integrate a nonnegative f(p) over the n-bin simplex.

    Parameters
    ----------
    n : int
        Number of bins (the integral itself is (n-1)-dimensional).
    f : callable
        Integrand on simplex points. By default it is called with one
        1-D probability vector at a time; with vectorized=True it gets
        a (k, n) array and must return k values. Negative or
        non-finite values abort the run: integrands here are densities
        and a sign flip or NaN would silently poison the log-space sum.
    spec : QuadratureSpec
    budget : int, optional
        Evaluation cap override; see resolve_eval_budget.

    Returns
    -------
    IntegralEstimate
    """
    n = _check_bins(n)
    if not isinstance(spec, QuadratureSpec):
        raise TypeError("spec must be a QuadratureSpec")

    def evaluate_linear(points):
        if vectorized:
            values = np.asarray(f(points), dtype=float)
        else:
            values = np.fromiter(
                (float(f(row)) for row in points), dtype=float,
                count=points.shape[0],
            )
        if values.shape != (points.shape[0],):
            raise IntegrationError(
                "vectorized integrand must return one value per point"
            )
        if not np.all(np.isfinite(values)):
            raise IntegrationError("integrand returned a non-finite value")
        if np.any(values < 0.0):
            raise IntegrationError(
                "integrand returned a negative value; simplex integrands "
                "must be nonnegative"
            )
        return values

    if spec.scheme == "nested_oracle":
        def scalar_f(p):
            return float(evaluate_linear(np.asarray(p, dtype=float)[None, :])[0])

        limit = resolve_eval_budget(budget)
        value, evaluations = nested_simplex_integral(
            scalar_f, n=n, rel_tol=spec.rel_tol, max_evaluations=limit
        )
        log_value = math.log(value) if value > 0.0 else -math.inf
        return IntegralEstimate(log_value, 0.0, evaluations, spec.scheme)

    def log_f(points):
        with np.errstate(divide="ignore"):
            return np.log(evaluate_linear(points))

    return integrate_simplex_log(n, log_f, spec, budget=budget)


def integrate_separable(m, spec=None, budget=None):
    """Integrate prod p_i^{m_i} as a product of n-1 one-axis integrals.

    The transformed integrand separates into per-angle kernels K_j
    (see spherical.log_kernel), so each axis is a single 1-D
    Gauss-Legendre sum and the product telescopes to the same value the
    full tensor grid would give, at a tiny fraction of the cost.
    """
    m = as_exponent_vector(m)
    n = m.size
    if spec is None:
        spec = QuadratureSpec(scheme="gauss_grid")
    if spec.scheme != "gauss_grid":
        raise ValueError(
            "integrate_separable is a Gauss computation; spec.scheme must "
            "be 'gauss_grid'"
        )
    evaluations = (n - 1) * spec.nodes_per_axis
    limit = resolve_eval_budget(budget)
    if evaluations > limit:
        raise IntegrationError(
            f"integrate_separable needs {evaluations} evaluations, over "
            f"the budget of {limit}"
        )
    theta, _, log_w = _angle_rule(spec.nodes_per_axis)
    log_total = 0.0
    for j in range(1, n):
        log_total += _logsumexp(log_w + log_kernel(j, n, m, theta))
    return IntegralEstimate(log_total, 0.0, evaluations, spec.scheme)


def nested_oracle(integrand, n=None, spec=None, budget=None):
    """Brute-force reference integral in raw p coordinates.

    integrand is either an exponent vector (integrand prod p_i^{m_i})
    or a scalar callable on full probability vectors; callables need
    an explicit n. Limited to n <= 5. See the oracle module for the
    machinery; this wrapper only adds the spec/budget plumbing and the
    log-form result.
    """
    if spec is None:
        spec = QuadratureSpec(scheme="nested_oracle")
    if spec.scheme != "nested_oracle":
        raise ValueError("spec.scheme must be 'nested_oracle'")
    limit = resolve_eval_budget(budget)
    value, evaluations = nested_simplex_integral(
        integrand, n=n, rel_tol=spec.rel_tol, max_evaluations=limit
    )
    log_value = math.log(value) if value > 0.0 else -math.inf
    return IntegralEstimate(log_value, 0.0, evaluations, spec.scheme)
