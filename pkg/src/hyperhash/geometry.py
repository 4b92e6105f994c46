"""Poincare-ball primitives: Mobius arithmetic, geodesic distance, tangent maps,
Klein-model conversions and the Einstein midpoint.

All functions operate on float64 arrays whose last axis is the vector dimension
and broadcast over any leading axes. Every operation that produces ball points
clamps its output to norm <= (1 - BALL_EPS)/sqrt(c) so downstream artanh and
conformal-factor evaluations stay finite.
"""

from __future__ import annotations

import numpy as np

from ._validation import check_array, check_curvature, check_same_dim

__all__ = [
    "BALL_EPS",
    "max_norm",
    "project_to_ball",
    "mobius_add",
    "distance",
    "pairwise_distance",
    "distance_matrix",
    "pairwise_distance_grad",
    "distance_grad_coefficients",
    "expmap",
    "expmap0",
    "expmap0_vjp",
    "logmap",
    "logmap0",
    "conformal_factor",
    "poincare_to_klein",
    "klein_to_poincare",
    "lorentz_factor",
    "einstein_midpoint",
    "boundary_clamp_count",
    "reset_boundary_clamp_count",
]

BALL_EPS = 1e-5    # relative margin kept between outputs and the ball boundary
_MIN_NORM = 1e-12  # below this a vector is treated as zero in direction-dependent maps
_MIN_SQDIST = 1e-24  # squared separation under which distance gradients are zeroed

# Count of artanh arguments that had to be clamped at 1 - BALL_EPS. Diagnostic
# only: clamping signals near-boundary inputs but is not an error.
_clamp_count = 0


def boundary_clamp_count() -> int:
    return _clamp_count


def reset_boundary_clamp_count() -> None:
    global _clamp_count
    _clamp_count = 0


def _sqnorm(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1, keepdims=True)


def max_norm(c: float) -> float:
    """Largest norm a produced ball point may have: (1 - BALL_EPS)/sqrt(c)."""
    return (1.0 - BALL_EPS) / np.sqrt(check_curvature(c))


def project_to_ball(x: np.ndarray, c: float) -> np.ndarray:
    """Radially rescale points so their norm does not exceed ``max_norm(c)``."""
    x = np.asarray(x, dtype=np.float64)
    limit = max_norm(c)
    norm = np.sqrt(_sqnorm(x))
    scale = np.where(norm > limit, limit / np.maximum(norm, _MIN_NORM), 1.0)
    return x * scale


def _mobius_add_raw(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    x2 = _sqnorm(x)
    y2 = _sqnorm(y)
    xy = np.sum(x * y, axis=-1, keepdims=True)
    num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
    den = 1.0 + 2.0 * c * xy + c * c * x2 * y2
    return num / den


def mobius_add(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Mobius addition x (+) y on the ball of curvature parameter c.

    x (+) y = ((1 + 2c<x,y> + c|y|^2) x + (1 - c|x|^2) y)
              / (1 + 2c<x,y> + c^2 |x|^2 |y|^2)
    """
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_dim(x, y, "mobius_add")
    return project_to_ball(_mobius_add_raw(x, y, c), c)


def distance(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Geodesic distance (2/sqrt(c)) artanh(sqrt(c) |(-x) (+) y|).

    The artanh argument is clamped at 1 - BALL_EPS; clamping is recorded in the
    module diagnostic counter rather than raised.
    """
    global _clamp_count
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_dim(x, y, "distance")
    m = _mobius_add_raw(-x, y, c)
    arg = np.sqrt(c) * np.sqrt(np.sum(m * m, axis=-1))
    clamped = arg > 1.0 - BALL_EPS
    if np.any(clamped):
        _clamp_count += int(np.count_nonzero(clamped))
        arg = np.minimum(arg, 1.0 - BALL_EPS)
    return (2.0 / np.sqrt(c)) * np.arctanh(arg)


def _distance_terms(x: np.ndarray, y: np.ndarray, c: float):
    """Shared quantities for the algebraically equivalent arcosh form of the
    distance: with A = 1 - c|x|^2, B = 1 - c|y|^2, N = |x - y|^2 and
    t = 2cN/(AB), the distance equals arcosh(1 + t)/sqrt(c)."""
    a = 1.0 - c * _sqnorm(x)
    b = 1.0 - c * _sqnorm(y)
    n = _sqnorm(x - y)
    t = 2.0 * c * n / (a * b)
    return a, b, n, t


def pairwise_distance(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Distance between broadcast point sets, identical to ``distance`` but
    evaluated through arcosh(1 + t) = log1p(t + sqrt(t(t + 2))), which avoids
    materializing Mobius sums for large batch x prototype grids."""
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_dim(x, y, "pairwise_distance")
    _, _, _, t = _distance_terms(x, y, c)
    t = t[..., 0]
    return np.log1p(t + np.sqrt(t * (t + 2.0))) / np.sqrt(c)


def distance_matrix(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """All-pairs distance between two point sets, (N, n) x (M, n) -> (N, M).

    Same arcosh evaluation as ``pairwise_distance`` but with the squared
    Euclidean separations assembled from a Gram product, so no N x M x n
    intermediate is materialized.
    """
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_dim(x, y, "distance_matrix")
    x2 = np.sum(x * x, axis=1)
    y2 = np.sum(y * y, axis=1)
    n2 = np.maximum(x2[:, None] + y2[None, :] - 2.0 * (x @ y.T), 0.0)
    # The Gram expansion cancels catastrophically for near-identical points;
    # anything below the accumulated rounding floor is a true zero.
    floor = (4.0 * x.shape[1] * np.finfo(np.float64).eps) * (x2[:, None] + y2[None, :])
    n2[n2 <= floor] = 0.0
    t = 2.0 * c * n2 / ((1.0 - c * x2)[:, None] * (1.0 - c * y2)[None, :])
    return np.log1p(t + np.sqrt(t * (t + 2.0))) / np.sqrt(c)


def pairwise_distance_grad(x: np.ndarray, y: np.ndarray, c: float):
    """Distance plus its gradients with respect to both endpoints.

    Returns ``(d, gx, gy)`` with gx = dD/dx and gy = dD/dy, broadcast like the
    inputs. At coincident points the distance has a cone singularity; there the
    gradients are defined as zero.
    """
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_dim(x, y, "pairwise_distance_grad")
    a, b, n, t = _distance_terms(x, y, c)
    d = np.log1p(t[..., 0] + np.sqrt(t[..., 0] * (t[..., 0] + 2.0))) / np.sqrt(c)
    # dD/du = 1/(sqrt(c) sqrt(u^2 - 1)) with u = 1 + t; u^2 - 1 = t (t + 2).
    s = np.sqrt(t * (t + 2.0))
    safe = n > _MIN_SQDIST
    inv = np.where(safe, 1.0 / (np.sqrt(c) * np.where(safe, s, 1.0)), 0.0)
    diff = x - y
    gx = inv * ((4.0 * c / (a * b)) * diff + (4.0 * c * c * n / (a * a * b)) * x)
    gy = inv * ((4.0 * c / (a * b)) * -diff + (4.0 * c * c * n / (a * b * b)) * y)
    return d, gx, gy


def distance_grad_coefficients(x: np.ndarray, y: np.ndarray, c: float):
    """Distance gradients in coefficient form over the (N, M) pair grid.

    The gradient of D(x_p, y_q) decomposes as

        dD/dx_p = cx_self[p, q] x_p + cx_other[p, q] y_q
        dD/dy_q = cy_self[p, q] y_q + cy_other[p, q] x_p

    which lets callers contract pair-weight matrices against the point sets
    with matrix products instead of materializing N x M x n tensors. Returns
    ``(d, cx_self, cx_other, cy_self, cy_other)``; coefficients are zero at
    coincident pairs.
    """
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_dim(x, y, "distance_grad_coefficients")
    x2 = np.sum(x * x, axis=1)
    y2 = np.sum(y * y, axis=1)
    n2 = np.maximum(x2[:, None] + y2[None, :] - 2.0 * (x @ y.T), 0.0)
    floor = (4.0 * x.shape[1] * np.finfo(np.float64).eps) * (x2[:, None] + y2[None, :])
    n2[n2 <= floor] = 0.0
    a = (1.0 - c * x2)[:, None]
    b = (1.0 - c * y2)[None, :]
    t = 2.0 * c * n2 / (a * b)
    d = np.log1p(t + np.sqrt(t * (t + 2.0))) / np.sqrt(c)
    s = np.sqrt(t * (t + 2.0))
    safe = n2 > _MIN_SQDIST
    inv = np.where(safe, 1.0 / (np.sqrt(c) * np.where(safe, s, 1.0)), 0.0)
    base = inv * (4.0 * c / (a * b))
    cx_self = base * (1.0 + c * n2 / a)
    cy_self = base * (1.0 + c * n2 / b)
    cx_other = -base
    cy_other = -base
    return d, cx_self, cx_other, cy_self, cy_other


def conformal_factor(x: np.ndarray, c: float) -> np.ndarray:
    """lambda_x = 2/(1 - c|x|^2), with a trailing singleton axis."""
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    return 2.0 / (1.0 - c * _sqnorm(x))


def expmap0(v: np.ndarray, c: float) -> np.ndarray:
    """Exponential map at the origin: tanh(sqrt(c)|v|) v/(sqrt(c)|v|)."""
    c = check_curvature(c)
    v = np.asarray(v, dtype=np.float64)
    norm = np.sqrt(_sqnorm(v))
    u = np.sqrt(c) * norm
    small = norm < _MIN_NORM
    coef = np.where(small, 1.0, np.tanh(u) / np.where(small, 1.0, u))
    return project_to_ball(coef * v, c)


def expmap(v: np.ndarray, c: float, base: np.ndarray | None = None) -> np.ndarray:
    """Exponential map at an arbitrary base point:

    exp_x(v) = x (+) tanh(sqrt(c) lambda_x |v| / 2) v/(sqrt(c)|v|)

    ``base=None`` means the origin, where the formula reduces to ``expmap0``.
    """
    if base is None:
        return expmap0(v, c)
    c = check_curvature(c)
    v = np.asarray(v, dtype=np.float64)
    base = np.asarray(base, dtype=np.float64)
    norm = np.sqrt(_sqnorm(v))
    small = norm < _MIN_NORM
    lam = conformal_factor(base, c)
    arg = np.sqrt(c) * lam * norm / 2.0
    coef = np.where(small, 0.0, np.tanh(arg) / np.where(small, 1.0, np.sqrt(c) * norm))
    return mobius_add(base, coef * v, c)


def logmap0(y: np.ndarray, c: float) -> np.ndarray:
    """Logarithmic map at the origin, the inverse of ``expmap0``:
    v = artanh(sqrt(c)|y|) y/(sqrt(c)|y|)."""
    c = check_curvature(c)
    y = np.asarray(y, dtype=np.float64)
    norm = np.sqrt(_sqnorm(y))
    arg = np.minimum(np.sqrt(c) * norm, 1.0 - BALL_EPS)
    small = norm < _MIN_NORM
    coef = np.where(small, 0.0, np.arctanh(arg) / np.where(small, 1.0, np.sqrt(c) * norm))
    return coef * y


def logmap(y: np.ndarray, c: float, base: np.ndarray | None = None) -> np.ndarray:
    """Logarithmic map at an arbitrary base point (inverse of ``expmap``)."""
    if base is None:
        return logmap0(y, c)
    c = check_curvature(c)
    m = mobius_add(-np.asarray(base, dtype=np.float64), y, c)
    norm = np.sqrt(_sqnorm(m))
    arg = np.minimum(np.sqrt(c) * norm, 1.0 - BALL_EPS)
    small = norm < _MIN_NORM
    lam = conformal_factor(base, c)
    coef = np.where(
        small, 0.0, (2.0 / (np.sqrt(c) * lam)) * np.arctanh(arg) / np.where(small, 1.0, norm)
    )
    return coef * m


def expmap0_vjp(v: np.ndarray, grad: np.ndarray, c: float) -> np.ndarray:
    """Pull an upstream gradient back through ``expmap0`` (ball clamp included).

    With u = sqrt(c)|v| and f(u) = tanh(u)/u the Jacobian of the unclamped map
    is f I + f'(|v|) v v^T / |v|; near u = 0 both factors are evaluated by
    series so the map degrades smoothly to the identity.
    """
    c = check_curvature(c)
    v = np.asarray(v, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    norm = np.sqrt(_sqnorm(v))
    u = np.sqrt(c) * norm
    small = u < 1e-4
    u_safe = np.where(small, 1.0, u)
    f = np.where(small, 1.0 - u * u / 3.0, np.tanh(u_safe) / u_safe)
    # (u sech^2 u - tanh u)/u^3 -> -2/3 + 8 u^2/15 as u -> 0
    gc = np.where(
        small,
        -2.0 / 3.0 + 8.0 * u * u / 15.0,
        (u_safe / np.cosh(u_safe) ** 2 - np.tanh(u_safe)) / u_safe**3,
    )
    vdotg = np.sum(v * grad, axis=-1, keepdims=True)
    out = f * grad + c * gc * vdotg * v

    # Where the ball clamp was active the map is m v/|v| instead; its Jacobian
    # is the tangential projector scaled by m/|v|.
    clamped = np.tanh(u) > 1.0 - BALL_EPS
    if np.any(clamped):
        limit = max_norm(c)
        nrm = np.maximum(norm, _MIN_NORM)
        vhat = v / nrm
        proj = grad - np.sum(vhat * grad, axis=-1, keepdims=True) * vhat
        out = np.where(clamped, (limit / nrm) * proj, out)
    return out


def poincare_to_klein(x: np.ndarray, c: float) -> np.ndarray:
    """Klein coordinates of a ball point: x_K = 2 x / (1 + c|x|^2)."""
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    return 2.0 * x / (1.0 + c * _sqnorm(x))


def klein_to_poincare(x: np.ndarray, c: float) -> np.ndarray:
    """Ball coordinates of a Klein point: x_D = x / (1 + sqrt(1 - c|x|^2))."""
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    sq = np.maximum(1.0 - c * _sqnorm(x), 0.0)
    return project_to_ball(x / (1.0 + np.sqrt(sq)), c)


def lorentz_factor(x_klein: np.ndarray, c: float) -> np.ndarray:
    """gamma = 1/sqrt(1 - c|x|^2) evaluated in Klein coordinates."""
    c = check_curvature(c)
    x_klein = np.asarray(x_klein, dtype=np.float64)
    return 1.0 / np.sqrt(np.maximum(1.0 - c * _sqnorm(x_klein), BALL_EPS**2))


def einstein_midpoint(
    points: np.ndarray, c: float, weights: np.ndarray | None = None
) -> np.ndarray:
    """Lorentz-factor weighted mean of ball points.

    The points are taken to the Klein model, averaged with weights
    gamma_i w_i / sum(gamma_j w_j), and mapped back to the ball.
    """
    c = check_curvature(c)
    pts = check_array(points, "points", ndim=2)
    if pts.shape[0] == 0:
        raise ValueError("einstein_midpoint requires at least one point")
    if weights is None:
        w = np.ones(pts.shape[0])
    else:
        w = check_array(weights, "weights", ndim=1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError("weights must match the number of points")
        if np.any(w < 0.0) or not np.any(w > 0.0):
            raise ValueError("weights must be nonnegative with positive total")
    k = poincare_to_klein(pts, c)
    gw = lorentz_factor(k, c)[:, 0] * w
    mid = (gw[:, None] * k).sum(axis=0) / gw.sum()
    return klein_to_poincare(mid, c)
