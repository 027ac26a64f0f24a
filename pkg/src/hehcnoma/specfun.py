"""Special-function kernels: Gaussian Q, log-Gamma, Gauss 2F1, a Meijer G^{3,3}_{4,5}
evaluator built on the Mellin-Barnes integral, and Gauss-Laguerre rules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special
from scipy.linalg import eigvalsh_tridiagonal

__all__ = [
    "ContourError",
    "ContourSpec",
    "ConvergenceError",
    "QuadratureRule",
    "gauss_laguerre",
    "hyp2f1",
    "hyp2f1_euler",
    "hyp2f1_series",
    "ln_gamma",
    "meijer_g_3345",
    "q_function",
]

HYP2F1_MAX_TERMS = 10_000
HYP2F1_TOL = 1e-12


class ConvergenceError(ArithmeticError):
    """A series or iterative scheme failed to reach its tolerance."""


class ContourError(ValueError):
    """No vertical line separates the two Gamma pole families."""


def q_function(x):
    """Gaussian tail probability Pr{N(0, 1) > x}. Accepts scalars or arrays."""
    return special.ndtr(-np.asarray(x, dtype=float))[()]


def ln_gamma(x: float) -> float:
    if not x > 0:
        raise ValueError(f"ln_gamma is defined for x > 0, got {x!r}")
    return math.lgamma(x)


# ---------------------------------------------------------------------------
# Gauss hypergeometric 2F1 for real z in [0, 1)
# ---------------------------------------------------------------------------

def _sum_series(a: float, b: float, c: float, z: float) -> float:
    total = 1.0
    term = 1.0
    # past k_settled the term ratio moves monotonically towards z, so
    # max(ratio, z) bounds every later ratio
    k_settled = 2.0 * max(abs(a), abs(b), abs(c)) + 2.0
    for k in range(HYP2F1_MAX_TERMS):
        ratio = (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        term *= ratio
        total += term
        if term == 0.0:
            return total
        r = max(abs(ratio), z)
        if k >= k_settled and r < 1.0 and abs(term) * r / (1.0 - r) <= HYP2F1_TOL * abs(total):
            return total
    raise ConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) did not converge in {HYP2F1_MAX_TERMS} terms"
    )


def hyp2f1_series(a: float, b: float, c: float, z: float) -> float:
    """Direct Gauss series, no transformation."""
    if z == 0.0:
        return 1.0
    return _sum_series(a, b, c, z)


def hyp2f1_euler(a: float, b: float, c: float, z: float) -> float:
    """Euler-transformed series (1-z)^(c-a-b) 2F1(c-a, c-b; c; z).

    Pulls the endpoint singularity out of the sum, so the remaining terms decay
    faster than the direct ones when c - a - b < 0.
    """
    if z == 0.0:
        return 1.0
    return (1.0 - z) ** (c - a - b) * _sum_series(c - a, c - b, c, z)


def _rgamma(x: float) -> float:
    return float(special.rgamma(x))


def _hyp2f1_connection(a: float, b: float, c: float, z: float, w: float) -> float:
    # z -> 1 - z connection formula; c - a - b must not be an integer
    s = c - a - b
    g_c = math.gamma(c)
    first = g_c * math.gamma(s) * _rgamma(c - a) * _rgamma(c - b)
    second = g_c * math.gamma(-s) * _rgamma(a) * _rgamma(b)
    out = 0.0
    if first != 0.0:
        out += first * _sum_series(a, b, 1.0 - s, w)
    if second != 0.0:
        out += second * w**s * _sum_series(c - a, c - b, 1.0 + s, w)
    return out


def hyp2f1(a: float, b: float, c: float, z: float, one_minus_z: float | None = None) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z in [0, 1).

    The direct series is used for z <= 0.5 and the Euler-transformed series
    above that. Close to z = 1 the 1 - z connection formula takes over when
    c - a - b is not an integer; pass ``one_minus_z`` when it is known more
    accurately than ``1 - z``. Raises ConvergenceError instead of returning a
    partial sum.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c!r}")
    if not 0.0 <= z < 1.0:
        raise ValueError(f"z must lie in [0, 1), got {z!r}")
    if z == 0.0:
        return 1.0
    if z <= 0.5:
        return _sum_series(a, b, c, z)
    s = c - a - b
    if z > 0.9 and abs(s - round(s)) > 1e-6:
        return _hyp2f1_connection(a, b, c, z, 1.0 - z if one_minus_z is None else one_minus_z)
    return hyp2f1_euler(a, b, c, z)


# ---------------------------------------------------------------------------
# Meijer G^{3,3}_{4,5} via the Mellin-Barnes integral
# ---------------------------------------------------------------------------

_PARAM_MATCH = 1e-13


@dataclass(frozen=True)
class ContourSpec:
    """Vertical integration line Re(s) = real_shift, |Im(s)| <= half_span."""

    real_shift: float
    half_span: float
    panel_count: int
    left_bound: float = -math.inf
    right_bound: float = math.inf

    def __post_init__(self):
        if not self.left_bound < self.real_shift < self.right_bound:
            raise ContourError(
                f"real_shift {self.real_shift} is not inside the pole-free strip "
                f"({self.left_bound}, {self.right_bound})"
            )
        if self.half_span <= 0:
            raise ValueError("half_span must be positive")
        if self.panel_count < 64:
            raise ValueError("panel_count must be at least 64")


def _reduce_parameters(top, bottom):
    """Split into Gamma factors of the integrand and cancel identical pairs.

    Returns (num_minus, num_plus, den_plus, den_minus): the integrand is
    prod Gamma(b - s) * prod Gamma(1 - a + s) / (prod Gamma(1 - b + s) * prod Gamma(a - s)).
    """
    if len(top) != 4 or len(bottom) != 5:
        raise ValueError("G^{3,3}_{4,5} takes 4 top and 5 bottom parameters")
    num_minus = [float(b) for b in bottom[:3]]
    num_plus = [float(a) for a in top[:3]]
    den_plus = [float(b) for b in bottom[3:]]
    den_minus = [float(top[3])]

    for a in list(den_minus):
        for b in num_minus:
            if abs(a - b) < _PARAM_MATCH:
                num_minus.remove(b)
                den_minus.remove(a)
                break
    for b in list(den_plus):
        for a in num_plus:
            if abs(a - b) < _PARAM_MATCH:
                num_plus.remove(a)
                den_plus.remove(b)
                break
    return num_minus, num_plus, den_plus, den_minus


def _strip(num_minus, num_plus):
    right = min(num_minus) if num_minus else math.inf
    left = max(a - 1.0 for a in num_plus) if num_plus else -math.inf
    return left, right


def _log_integrand(s, x, params):
    num_minus, num_plus, den_plus, den_minus = params
    out = s * math.log(x)
    for b in num_minus:
        out = out + special.loggamma(b - s)
    for a in num_plus:
        out = out + special.loggamma(1.0 - a + s)
    for b in den_plus:
        out = out - special.loggamma(1.0 - b + s)
    for a in den_minus:
        out = out - special.loggamma(a - s)
    return out


def _saddle_shift(x, params, left, right) -> float:
    # On the real axis the log-integrand is convex; at its minimum the vertical
    # line crosses a saddle point and the integrand peaks at Im(s) = 0 instead
    # of oscillating with large magnitude. Poles stay at least a quarter of the
    # strip width (capped at 0.25) away.
    lo = left if math.isfinite(left) else (right - 50.0 if math.isfinite(right) else -50.0)
    hi = right if math.isfinite(right) else lo + 100.0
    margin = min(0.25, 0.25 * (hi - lo))
    res = optimize.minimize_scalar(
        lambda s: float(np.real(_log_integrand(complex(s), x, params))),
        bounds=(lo + margin, hi - margin),
        method="bounded",
        options={"xatol": 1e-6},
    )
    return float(res.x)


def default_contour(top, bottom, x: float, panel_count: int = 256) -> ContourSpec:
    """Place the line through the real saddle point and grow the span until the
    integrand tails off."""
    params = _reduce_parameters(top, bottom)
    left, right = _strip(params[0], params[1])
    if not left < right:
        raise ContourError(
            f"pole families overlap: left boundary {left}, right boundary {right}"
        )
    shift = _saddle_shift(x, params, left, right)

    t = np.linspace(0.0, 4.0, 65)
    peak = np.max(np.real(_log_integrand(shift + 1j * t, x, params)))
    span = 8.0
    while span < 400.0:
        tail = np.real(_log_integrand(shift + 1j * span, x, params))
        if tail - peak < math.log(1e-14):
            break
        span *= 1.5
    else:
        raise ConvergenceError("Mellin-Barnes integrand does not decay along the contour")
    return ContourSpec(shift, span, panel_count, left, right)


def _trapezoid(x, params, contour: ContourSpec, panels: int) -> float:
    # integrand is conjugate-symmetric in Im(s), so integrate over t >= 0 only
    t = np.linspace(0.0, contour.half_span, panels + 1)
    vals = np.real(np.exp(_log_integrand(contour.real_shift + 1j * t, x, params)))
    h = t[1] - t[0]
    return float(h * (vals.sum() - 0.5 * (vals[0] + vals[-1])) / math.pi)


def meijer_g_3345(top, bottom, x: float, contour: ContourSpec | None = None, rtol: float = 1e-8) -> float:
    r"""Meijer G^{3,3}_{4,5}(x | top; bottom) for x > 0 and real parameters.

    The Mellin-Barnes integral

    .. math:: \frac{1}{2\pi i}\int_L
        \frac{\prod_{j\le3}\Gamma(b_j-s)\prod_{j\le3}\Gamma(1-a_j+s)}
             {\Gamma(1-b_4+s)\Gamma(1-b_5+s)\Gamma(a_4-s)} x^s\,ds

    is evaluated on a vertical line with the trapezoidal rule; Gamma products
    are taken in log-space. Identical numerator/denominator Gamma factors are
    cancelled before the pole strip is located, so removable poles never block
    the contour.

    Parameters
    ----------
    top : sequence of 4 floats
    bottom : sequence of 5 floats
    x : float
        Positive argument.
    contour : ContourSpec, optional
        Explicit contour; built by :func:`default_contour` when omitted.
    rtol : float
        Relative agreement demanded between successive panel doublings.

    Raises
    ------
    ContourError
        If no vertical line separates the pole families, or the given contour
        lies outside the pole-free strip.
    ConvergenceError
        If two doublings of the panel count do not stabilise the value.
    """
    if not x > 0:
        raise ValueError(f"x must be positive, got {x!r}")
    params = _reduce_parameters(top, bottom)
    left, right = _strip(params[0], params[1])
    if not left < right:
        raise ContourError(
            f"pole families overlap: left boundary {left}, right boundary {right}"
        )
    if contour is None:
        contour = default_contour(top, bottom, x)
    elif not left < contour.real_shift < right:
        raise ContourError(
            f"real_shift {contour.real_shift} outside pole-free strip ({left}, {right})"
        )

    panels = contour.panel_count
    prev = _trapezoid(x, params, contour, panels)
    for _ in range(2):
        panels *= 2
        cur = _trapezoid(x, params, contour, panels)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise ConvergenceError(
        f"Meijer-G did not stabilise to {rtol} after doubling to {panels} panels"
    )


# ---------------------------------------------------------------------------
# Gauss-Laguerre quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for the weight function x**alpha * exp(-x) on (0, inf).

    ``log_weights`` keeps the weights of the far nodes that underflow double
    precision at high order.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    alpha: float = 0.0
    log_weights: np.ndarray | None = None

    def integrate(self, f) -> float:
        """Quadrature of ``f`` against the rule's weight function."""
        return float(np.dot(self.weights, f(self.nodes)))


def _laguerre_scaled(n: int, alpha: float, x: np.ndarray):
    """L_n^alpha(x), L_{n-1}^alpha(x) divided by exp(log_scale), plus log_scale."""
    p0 = np.ones_like(x)
    p1 = 1.0 + alpha - x
    log_scale = np.zeros_like(x)
    if n == 1:
        return p1, p0, log_scale
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1 + alpha - x) * p1 - (k - 1 + alpha) * p0) / k
        big = np.maximum(np.abs(p1), np.abs(p0))
        rescale = big > 1e100
        if np.any(rescale):
            s = np.where(rescale, big, 1.0)
            p0 = p0 / s
            p1 = p1 / s
            log_scale = log_scale + np.log(s)
    return p1, p0, log_scale


def gauss_laguerre(order: int, alpha: float = 0.0, max_iter: int = 100) -> QuadratureRule:
    """Gauss-Laguerre rule of the given order for the weight x**alpha e^{-x}.

    Nodes start from the eigenvalues of the Jacobi matrix and are polished by
    Newton's method on the three-term recurrence in extended precision; the
    weights use x_i / ((n + alpha) L_{n-1}(x_i))**2 in log-space so high orders
    neither overflow nor lose the far-tail weights.
    """
    if not 2 <= order <= 256:
        raise ValueError(f"order must be in [2, 256], got {order!r}")
    if not alpha > -1:
        raise ValueError("alpha must exceed -1")
    n = order
    k = np.arange(1, n + 1)
    diag = 2 * k - 1 + alpha
    off = np.sqrt(k[:-1] * (k[:-1] + alpha))
    x = np.sort(eigvalsh_tridiagonal(diag, off)).astype(np.longdouble)
    a = np.longdouble(alpha)

    for _ in range(max_iter):
        pn, pn1, _ = _laguerre_scaled(n, a, x)
        dx = pn * x / (n * pn - (n + a) * pn1)
        x = x - dx
        # nodes are returned as doubles; recurrence rounding near the smallest
        # node leaves about one double ulp of jitter at high order
        if np.all(np.abs(dx) <= 4e-16 * np.abs(x)):
            break
    else:
        raise ConvergenceError(f"Laguerre root polishing did not converge for order {n}")
    if not (np.all(np.diff(x) > 0) and np.all(x > 0)):
        raise ConvergenceError("Laguerre nodes are not distinct and positive")

    _, pn1, log_scale = _laguerre_scaled(n, a, x)
    log_w = (
        math.lgamma(n + alpha + 1) - math.lgamma(n + 1)
        + np.log(x)
        - 2 * (np.log((n + a) * np.abs(pn1)) + log_scale)
    )
    log_w = log_w.astype(float)
    return QuadratureRule(
        nodes=x.astype(float), weights=np.exp(log_w), order=n, alpha=float(alpha), log_weights=log_w
    )
