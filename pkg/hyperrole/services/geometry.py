"""
Poincaré-ball kernel (curvature -1).

Every function works on float64 arrays whose last axis holds coordinates,
so a single point of shape (d,) and a stack of shape (n, d) are both valid.
"""
import numpy as np

EPS_BOUNDARY = 1e-5
DELTA_STAB = 1e-15
MAX_NORM = 1.0 - 1e-15


def _sqnorm(z: np.ndarray) -> np.ndarray:
    return np.sum(z * z, axis=-1)


def _norm(z: np.ndarray) -> np.ndarray:
    return np.sqrt(_sqnorm(z))


def conformal_factor(z: np.ndarray) -> np.ndarray:
    """lambda_z = 2 / (1 - |z|^2)"""
    z = np.asarray(z, dtype=np.float64)
    return 2.0 / (1.0 - _sqnorm(z))


def distance(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Geodesic distance; the arcosh argument is clamped to >= 1."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    diff = _sqnorm(u - v)
    denom = (1.0 - _sqnorm(u)) * (1.0 - _sqnorm(v))
    arg = np.maximum(1.0 + 2.0 * diff / denom, 1.0)
    return np.arccosh(arg)


def project(z: np.ndarray, eps: float = EPS_BOUNDARY) -> np.ndarray:
    """Pull points back inside the ball: z * min(1, (1 - eps) / (|z| + eps))"""
    z = np.asarray(z, dtype=np.float64)
    norm = _norm(z)
    scale = np.minimum(1.0, (1.0 - eps) / (norm + eps))
    return z * scale[..., None] if z.ndim > 1 else z * scale


def mobius_add(u: np.ndarray, v: np.ndarray, eps: float = EPS_BOUNDARY) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    uv = np.sum(u * v, axis=-1, keepdims=True)
    uu = np.sum(u * u, axis=-1, keepdims=True)
    vv = np.sum(v * v, axis=-1, keepdims=True)
    num = (1.0 + 2.0 * uv + vv) * u + (1.0 - uu) * v
    den = 1.0 + 2.0 * uv + uu * vv
    return project(num / den, eps)


def log0(z: np.ndarray) -> np.ndarray:
    """Tangent vector at the origin: 2 artanh(|z|) z / |z|, zero at the origin."""
    z = np.asarray(z, dtype=np.float64)
    norm = np.minimum(_norm(z), MAX_NORM)
    safe = np.where(norm > 0, norm, 1.0)
    factor = np.where(norm > 0, 2.0 * np.arctanh(norm) / safe, 0.0)
    return z * factor[..., None] if z.ndim > 1 else z * factor


def exp0(t: np.ndarray, delta: float = DELTA_STAB, eps: float = EPS_BOUNDARY) -> np.ndarray:
    """Stabilised exponential map at the origin: tanh(|t|/2) t / (|t| + delta), projected."""
    t = np.asarray(t, dtype=np.float64)
    norm = _norm(t)
    factor = np.tanh(norm / 2.0) / (norm + delta)
    out = t * factor[..., None] if t.ndim > 1 else t * factor
    return project(out, eps)


def radius(z: np.ndarray) -> np.ndarray:
    """Hyperbolic radius 2 artanh(|z|), the distance to the origin."""
    z = np.asarray(z, dtype=np.float64)
    return 2.0 * np.arctanh(np.minimum(_norm(z), MAX_NORM))


def distance_grad(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    Euclidean gradient of distance(u, v) with respect to u.

    With a = 1 - |u|^2, b = 1 - |v|^2, s = |u - v|^2 and x the arcosh argument:
    4 / (a b sqrt(x^2 - 1)) * ((u - v) + s u / a). Zero where u == v.
    The gradient with respect to v is distance_grad(v, u).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    a = 1.0 - np.sum(u * u, axis=-1, keepdims=True)
    b = 1.0 - np.sum(v * v, axis=-1, keepdims=True)
    diff = u - v
    s = np.sum(diff * diff, axis=-1, keepdims=True)
    x = 1.0 + 2.0 * s / (a * b)
    root = np.sqrt(np.maximum(x * x - 1.0, 0.0))
    coincident = root <= 0.0
    scale = np.where(coincident, 0.0, 4.0 / (a * b * np.where(coincident, 1.0, root)))
    return scale * (diff + s * u / a)


def pairwise_distance(x: np.ndarray, y: np.ndarray = None) -> np.ndarray:
    """Distance matrix between the rows of x and the rows of y (defaults to x)."""
    x = np.asarray(x, dtype=np.float64)
    same = y is None
    y = x if same else np.asarray(y, dtype=np.float64)
    xx = _sqnorm(x)
    yy = _sqnorm(y)
    sq = np.maximum(xx[:, None] + yy[None, :] - 2.0 * (x @ y.T), 0.0)
    if same:
        np.fill_diagonal(sq, 0.0)
    denom = (1.0 - xx)[:, None] * (1.0 - yy)[None, :]
    return np.arccosh(np.maximum(1.0 + 2.0 * sq / denom, 1.0))


def riemannian_rescale(z: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Inverse-metric rescaling (1 - |z|^2)^2 / 4 of a Euclidean gradient."""
    factor = (1.0 - np.sum(z * z, axis=-1, keepdims=True)) ** 2 / 4.0
    return factor * grad
