"""
Reference displacement fields with a uniform-grid element locator.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.param import inverse_bilinear, physical_gradients, shape_q4
from mesh.quad_mesh import QuadMesh
from utils.errors import NoPreimage, PointNotLocated


class BucketLocator:
    """
    Uniform grid over the mesh bounding box; each bucket lists the elements
    whose bounding boxes overlap it.
    """

    def __init__(self, mesh: QuadMesh, buckets_per_side: Optional[int] = None):
        self.mesh = mesh
        coords = mesh.all_element_coords()
        self.lo, self.hi = mesh.bbox
        span = np.maximum(self.hi - self.lo, 1e-300)
        side = buckets_per_side or max(1, int(np.ceil(np.sqrt(mesh.n_elems))))
        self.shape = np.array([side, side])
        self.cell = span / self.shape
        self.tol = 1e-10 * float(np.max(span))

        emin = coords.min(axis=1) - self.tol
        emax = coords.max(axis=1) + self.tol
        i0 = self._bucket(emin)
        i1 = self._bucket(emax)
        self.buckets: Dict[Tuple[int, int], List[int]] = {}
        for e in range(mesh.n_elems):
            for i in range(i0[e, 0], i1[e, 0] + 1):
                for j in range(i0[e, 1], i1[e, 1] + 1):
                    self.buckets.setdefault((i, j), []).append(e)

    def _bucket(self, points: np.ndarray) -> np.ndarray:
        idx = np.floor((np.asarray(points, dtype=float) - self.lo) / self.cell).astype(np.int64)
        return np.clip(idx, 0, self.shape - 1)

    def candidates(self, point) -> List[int]:
        point = np.asarray(point, dtype=float)
        if np.any(point < self.lo - self.tol) or np.any(point > self.hi + self.tol):
            return []
        i, j = self._bucket(point)
        return self.buckets.get((int(i), int(j)), [])

    def locate(self, point) -> Tuple[int, np.ndarray]:
        """
        Containing element and its positive-branch parametric coordinates.

        Raises:
            PointNotLocated: no candidate element maps onto the point
        """
        for e in self.candidates(point):
            try:
                roots = inverse_bilinear(self.mesh.element_coords(e), point)
            except NoPreimage:
                continue
            positive = [r for r in roots if r.sign > 0]
            if positive:
                return e, np.array(positive[0].xi)
        raise PointNotLocated(point)


class ReferenceField:
    """A converged displacement on a (typically fine, regular) mesh."""

    def __init__(self, mesh: QuadMesh, u: np.ndarray):
        self.mesh = mesh
        self.u = np.asarray(u, dtype=float).reshape(-1)
        if len(self.u) != mesh.n_dofs:
            raise ValueError(f"Reference field has {len(self.u)} values for {mesh.n_dofs} dofs")
        self.locator = BucketLocator(mesh)
        self.logger = logging.getLogger('analysis')

    def locate(self, point) -> Tuple[int, np.ndarray]:
        return self.locator.locate(point)

    def _element_u(self, e: int) -> np.ndarray:
        return self.u.reshape(-1, 2)[self.mesh.elems[e]]

    def value(self, point) -> np.ndarray:
        """Interpolated displacement (2,) at a physical point."""
        e, xi = self.locate(point)
        return shape_q4(xi) @ self._element_u(e)

    def gradient(self, point) -> np.ndarray:
        """Displacement gradient (2, 2) of the bilinear interpolant at a physical point."""
        e, xi = self.locate(point)
        G, _ = physical_gradients(self.mesh.element_coords(e), xi)
        return self._element_u(e).T @ G

    def gradients(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.gradient(p) for p in np.asarray(points, dtype=float).reshape(-1, 2)])

