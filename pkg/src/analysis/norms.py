"""
H1 seminorm errors, probes and rate fitting.
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from analysis.reference import ReferenceField
from assembly.system import Discretization
from mesh.classify import TangleReport
from mesh.quad_mesh import QuadMesh
from storage.models import RunResult

logger = logging.getLogger('analysis')


def quadrature_sample(mesh: QuadMesh, u: np.ndarray, report: Optional[TangleReport] = None,
                      refine: int = 2, discretization: Optional[Discretization] = None):
    """
    Physical points (P, 2), weights (P,) and discrete gradients (P, 2, 2).

    Convex elements contribute their 2×2 Gauss points, concave elements their
    triangulated-polygon points on the positive branch.
    """
    disc = discretization or Discretization(mesh, report, 'itfem', refine)
    ue = disc.element_displacements(u)
    coords = mesh.all_element_coords()[disc.order]
    points, weights, grads = [], [], []
    offset = 0
    for batch in disc.batches:
        if batch.size == 0:
            continue
        sl = slice(offset, offset + batch.size)
        points.append(np.einsum('eqa,eai->eqi', batch.N, coords[sl]).reshape(-1, 2))
        weights.append(batch.w.reshape(-1))
        grads.append(np.einsum('eai,eqaj->eqij', ue[sl], batch.G).reshape(-1, 2, 2))
        offset += batch.size
    return np.concatenate(points), np.concatenate(weights), np.concatenate(grads)


def h1_seminorm_error(mesh: QuadMesh, u: np.ndarray, reference: ReferenceField,
                      report: Optional[TangleReport] = None, refine: int = 2) -> float:
    """
    ‖∇u_ref − ∇u_h‖ over the solution mesh, sampled at its own quadrature points.

    Raises:
        PointNotLocated: a quadrature point lies outside the reference mesh
    """
    points, weights, grads = quadrature_sample(mesh, u, report, refine)
    ref = reference.gradients(points)
    diff = ref - grads
    return float(np.sqrt(np.sum(weights * np.sum(diff * diff, axis=(1, 2)))))


def h1_seminorm_difference(mesh: QuadMesh, u1: np.ndarray, u2: np.ndarray,
                           report: Optional[TangleReport] = None, refine: int = 2) -> float:
    """‖∇u1 − ∇u2‖ for two fields on the same mesh."""
    disc = Discretization(mesh, report, 'itfem', refine)
    _, weights, g1 = quadrature_sample(mesh, u1, discretization=disc)
    _, _, g2 = quadrature_sample(mesh, u2, discretization=disc)
    diff = g1 - g2
    return float(np.sqrt(np.sum(weights * np.sum(diff * diff, axis=(1, 2)))))


PointSpec = Union[str, int, Sequence[float]]


def probe(run: Union[RunResult, np.ndarray], point: PointSpec, mesh: QuadMesh,
          step: Optional[int] = None) -> np.ndarray:
    """
    Displacement (ux, uy) at a node set's first node, a node index or a point.

    Points that are not nodes are interpolated on the positive branch of
    their containing element.

    Raises:
        PointNotLocated: point outside the mesh
        UnknownSet: unknown node set name
    """
    if isinstance(run, RunResult):
        u = run.u if step is None else run.steps[step].u
    else:
        u = np.asarray(run, dtype=float)
    nodal = u.reshape(-1, 2)
    if isinstance(point, str):
        return nodal[int(mesh.node_set(point)[0])].copy()
    if isinstance(point, (int, np.integer)):
        return nodal[int(point)].copy()
    node = mesh.find_node(point)
    if node is not None:
        return nodal[node].copy()
    return ReferenceField(mesh, u).value(point)


def fit_slope(h: Sequence[float], e: Sequence[float]) -> Tuple[float, float]:
    """
    Least-squares slope of log e against log h and the RMS fit residual.

    Non-finite or non-positive entries are skipped; fewer than two points give NaN.
    """
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    ok = np.isfinite(h) & np.isfinite(e) & (h > 0) & (e > 0)
    if ok.sum() < 2:
        return float('nan'), float('nan')
    x, y = np.log(h[ok]), np.log(e[ok])
    coeffs = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((np.polyval(coeffs, x) - y) ** 2)))
    return float(coeffs[0]), residual

