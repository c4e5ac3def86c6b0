"""
Isoparametric Q4 toolkit.

Shape functions, Jacobians, the linear det J representation, inverse bilinear
mapping, the triangulated quadrature over the invertible part of a concave
element and the constraint row evaluated at its re-entrant vertex.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from utils.errors import NoPreimage, NotConcave, PreimageNotFound

# Parametric corner signs, counter-clockwise from (-1, -1).
CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])

EPS_XI = 1e-9
EPS_DEGENERATE = 1e-12
NEWTON_POLISH_STEPS = 3

_G = 1.0 / np.sqrt(3.0)
GAUSS_2X2_POINTS = np.array([[-_G, -_G], [_G, -_G], [_G, _G], [-_G, _G]])
GAUSS_2X2_WEIGHTS = np.ones(4)

# Degree-3 four-point triangle rule: barycentric points, weights relative to the area.
TRI_POINTS = np.array([
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [0.6, 0.2, 0.2],
    [0.2, 0.6, 0.2],
    [0.2, 0.2, 0.6],
])
TRI_WEIGHTS = np.array([-27.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0])


class ParamPoint(NamedTuple):
    xi1: float
    xi2: float


class DetJCoeffs(NamedTuple):
    """det J(ξ) = a0 + a1·ξ1 + a2·ξ2"""

    a0: float
    a1: float
    a2: float

    def __call__(self, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        return self.a0 + self.a1 * xi[..., 0] + self.a2 * xi[..., 1]

    @property
    def scale(self) -> float:
        return abs(self.a0) + abs(self.a1) + abs(self.a2)


class Preimage(NamedTuple):
    xi: ParamPoint
    sign: int
    det_j: float


def shape_q4(xi) -> np.ndarray:
    """Bilinear shape functions, shape (..., 4)."""
    xi = np.asarray(xi, dtype=float)
    return 0.25 * (1.0 + xi[..., None, 0] * CORNERS[:, 0]) * (1.0 + xi[..., None, 1] * CORNERS[:, 1])


def grad_shape_q4(xi) -> np.ndarray:
    """Parametric gradients, shape (..., 4, 2)."""
    xi = np.asarray(xi, dtype=float)
    s1 = CORNERS[:, 0]
    s2 = CORNERS[:, 1]
    d1 = 0.25 * s1 * (1.0 + xi[..., None, 1] * s2)
    d2 = 0.25 * s2 * (1.0 + xi[..., None, 0] * s1)
    return np.stack([d1, d2], axis=-1)


def forward_map(coords: np.ndarray, xi) -> np.ndarray:
    """Physical point(s) X(ξ)."""
    return shape_q4(xi) @ np.asarray(coords, dtype=float)


def jacobian(coords: np.ndarray, xi) -> Tuple[np.ndarray, np.ndarray]:
    """
    J = Σ_a X_a ⊗ ∇ξ N_a and its determinant.

    Returns:
        (J with shape (..., 2, 2), detJ with shape (...))
    """
    dn = grad_shape_q4(xi)
    jac = np.einsum('ai,...aj->...ij', np.asarray(coords, dtype=float), dn)
    return jac, np.linalg.det(jac)


def physical_gradients(coords: np.ndarray, xi) -> Tuple[np.ndarray, np.ndarray]:
    """∇X N = J^-T ∇ξ N, shape (..., 4, 2), together with det J."""
    jac, det = jacobian(coords, xi)
    dn = grad_shape_q4(xi)
    inv = np.linalg.inv(jac)
    return np.einsum('...aj,...ji->...ai', dn, inv), det


def _map_coeffs(coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """X(ξ) = c0 + c1·ξ1 + c2·ξ2 + c3·ξ1·ξ2"""
    coords = np.asarray(coords, dtype=float)
    s1 = CORNERS[:, 0]
    s2 = CORNERS[:, 1]
    c0 = 0.25 * coords.sum(axis=0)
    c1 = 0.25 * s1 @ coords
    c2 = 0.25 * s2 @ coords
    c3 = 0.25 * (s1 * s2) @ coords
    return c0, c1, c2, c3


def _cross(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def detj_coeffs(coords: np.ndarray) -> DetJCoeffs:
    """Exact linear representation of det J over the parametric square."""
    _, c1, c2, c3 = _map_coeffs(coords)
    return DetJCoeffs(_cross(c1, c2), _cross(c1, c3), _cross(c3, c2))


def _real_roots(a: float, b: float, c: float) -> List[float]:
    coeffs = np.array([a, b, c])
    if not np.any(coeffs):
        return []
    roots = np.roots(coeffs)
    return [float(r.real) for r in roots if abs(r.imag) <= 1e-7 * (1.0 + abs(r.real))]


def _polish(coords: np.ndarray, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    for _ in range(NEWTON_POLISH_STEPS):
        jac, det = jacobian(coords, xi)
        if det == 0.0:
            break
        xi = xi - np.linalg.solve(jac, forward_map(coords, xi) - x)
    return xi


def inverse_bilinear(coords: np.ndarray, x) -> List[Preimage]:
    """
    All preimages of X inside the parametric square.

    The map is reduced to a scalar quadratic in each parametric coordinate, the
    companion coordinate is recovered by projection and every candidate is
    polished by Newton steps. Roots with |det J| below the degeneracy threshold
    are rejected.

    Returns:
        preimages ordered by decreasing det J

    Raises:
        NoPreimage: X is outside the set covered by the element
    """
    coords = np.asarray(coords, dtype=float)
    x = np.asarray(x, dtype=float)
    c0, c1, c2, c3 = _map_coeffs(coords)
    coeffs = detj_coeffs(coords)
    d = x - c0
    size = float(np.sqrt(np.sum(np.ptp(coords, axis=0) ** 2)))

    candidates = []
    # eliminate ξ2: cross(d - c1 ξ1, c2 + c3 ξ1) = 0
    for r in _real_roots(-coeffs.a1, _cross(d, c3) - coeffs.a0, _cross(d, c2)):
        v = c2 + c3 * r
        vv = float(v @ v)
        if vv > 0.0:
            candidates.append(np.array([r, float((d - c1 * r) @ v) / vv]))
    # eliminate ξ1: cross(d - c2 ξ2, c1 + c3 ξ2) = 0
    for r in _real_roots(coeffs.a2, _cross(d, c3) + coeffs.a0, _cross(d, c1)):
        v = c1 + c3 * r
        vv = float(v @ v)
        if vv > 0.0:
            candidates.append(np.array([float((d - c2 * r) @ v) / vv, r]))

    found: List[Preimage] = []
    limit = 1.0 + EPS_XI
    for xi in candidates:
        if not np.all(np.isfinite(xi)) or np.any(np.abs(xi) > 1.5):
            continue
        xi = _polish(coords, x, xi)
        if np.any(np.abs(xi) > limit):
            continue
        if np.linalg.norm(forward_map(coords, xi) - x) > 1e-10 * max(size, 1e-300):
            continue
        if any(np.linalg.norm(xi - np.array(p.xi)) < 1e-8 for p in found):
            continue
        det = float(coeffs(xi))
        if abs(det) < EPS_DEGENERATE * coeffs.scale:
            continue
        xi = np.clip(xi, -1.0, 1.0)
        found.append(Preimage(ParamPoint(float(xi[0]), float(xi[1])), 1 if det > 0 else -1, det))

    if not found:
        raise NoPreimage(f"Point {tuple(x)} is not covered by the element")
    found.sort(key=lambda p: -p.det_j)
    return found


def positive_preimage(coords: np.ndarray, x) -> ParamPoint:
    """Unique positive-Jacobian preimage; PreimageNotFound otherwise."""
    try:
        roots = inverse_bilinear(coords, x)
    except NoPreimage:
        raise PreimageNotFound(f"point {tuple(np.asarray(x, dtype=float))} has no preimage")
    positive = [p for p in roots if p.sign > 0]
    if not positive:
        raise PreimageNotFound(f"point {tuple(np.asarray(x, dtype=float))} has only negative-branch preimages")
    return positive[0].xi


def gauss_2x2() -> List[Tuple[ParamPoint, float]]:
    """Tensor-product 2-point Gauss rule on [-1, 1]²."""
    return [(ParamPoint(*p), float(w)) for p, w in zip(GAUSS_2X2_POINTS, GAUSS_2X2_WEIGHTS)]


@dataclass
class TriQuadrature:
    """
    Quadrature over the simple polygon of a concave element.

    Weights carry physical area units; `xi` holds the positive-branch
    preimage of every point and `grads` the physical shape gradients there.
    """

    triangles: np.ndarray   # (T, 3, 2)
    points: np.ndarray      # (Q, 2)
    weights: np.ndarray     # (Q,)
    xi: np.ndarray          # (Q, 2)
    grads: np.ndarray       # (Q, 4, 2)
    refine: int

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    @property
    def n_points(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def refine_triangles(triangles: np.ndarray, levels: int) -> np.ndarray:
    """Uniform midpoint refinement, 4^levels children per triangle, orientation kept."""
    tris = np.asarray(triangles, dtype=float)
    for _ in range(levels):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
        tris = np.concatenate([
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ])
    return tris


def triangle_rule(triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Physical points (T·4, 2) and weights of the four-point rule."""
    x0, x1, x2 = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    e1 = x1 - x0
    e2 = x2 - x0
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    points = np.einsum('qk,tkd->tqd', TRI_POINTS, triangles).reshape(-1, 2)
    weights = (areas[:, None] * TRI_WEIGHTS[None, :]).reshape(-1)
    return points, weights


def fan_split(coords: np.ndarray, reentrant_local: int) -> np.ndarray:
    """Split the concave polygon into two triangles at its re-entrant vertex."""
    coords = np.asarray(coords, dtype=float)
    r = reentrant_local
    p = [coords[(r + k) % 4] for k in range(4)]
    return np.array([[p[0], p[1], p[2]], [p[0], p[2], p[3]]])


def _reentrant_corner(coords: np.ndarray) -> Optional[int]:
    nxt = np.roll(coords, -1, axis=0) - coords
    prv = np.roll(coords, 1, axis=0) - coords
    cross = nxt[:, 0] * prv[:, 1] - nxt[:, 1] * prv[:, 0]
    negative = np.flatnonzero(cross < 0.0)
    return int(negative[0]) if negative.size == 1 else None


def triangulate_concave(coords: np.ndarray, refine: int = 2,
                        reentrant_local: Optional[int] = None) -> TriQuadrature:
    """
    Triangulated quadrature over a concave element's polygon.

    Args:
        coords: (4, 2) corner coordinates
        refine: uniform refinement level r (2·4^r triangles, 4 points each)
        reentrant_local: re-entrant corner, detected when omitted

    Raises:
        NotConcave: the element has no single re-entrant corner
        PreimageNotFound: a quadrature point has no positive-branch preimage
    """
    coords = np.asarray(coords, dtype=float)
    detected = _reentrant_corner(coords)
    if detected is None or (reentrant_local is not None and reentrant_local != detected):
        raise NotConcave("triangulated quadrature requires a concave element")
    triangles = refine_triangles(fan_split(coords, detected), refine)
    points, weights = triangle_rule(triangles)
    xi = np.array([positive_preimage(coords, p) for p in points], dtype=float).reshape(-1, 2)
    grads, _ = physical_gradients(coords, xi)
    return TriQuadrature(triangles, points, weights, xi, grads, refine)


def constraint_row(coords: np.ndarray, reentrant_local: int) -> np.ndarray:
    """
    Jump of the shape functions at the re-entrant vertex: N(ξ*₊) − N(ξ_D).

    ξ_D is the parametric corner of the re-entrant vertex and ξ*₊ its
    positive-branch preimage. The coefficients sum to zero.

    Raises:
        PreimageNotFound: degenerate tangling, no positive-branch root
    """
    coords = np.asarray(coords, dtype=float)
    vertex = coords[reentrant_local]
    corner = CORNERS[reentrant_local]
    try:
        roots = inverse_bilinear(coords, vertex)
    except NoPreimage:
        raise PreimageNotFound("re-entrant vertex has no preimage")
    positive = [p for p in roots if p.sign > 0 and np.linalg.norm(np.array(p.xi) - corner) > 1e-8]
    if not positive:
        raise PreimageNotFound("re-entrant vertex has no positive-branch preimage")
    row = shape_q4(np.array(positive[0].xi))
    row[reentrant_local] -= 1.0
    return row


def polygon_centroid(coords: np.ndarray) -> np.ndarray:
    """Area centroid of the simple polygon traced by the corners."""
    coords = np.asarray(coords, dtype=float)
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])
