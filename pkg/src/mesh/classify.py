"""
Element classification by corner cross products.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Any, List, Optional

import numpy as np

from mesh.quad_mesh import QuadMesh
from utils.errors import SelfIntersecting

# Relative degeneracy tolerance, scaled by the element bounding-box diagonal squared.
EPS_GEOM = 1e-12

logger = logging.getLogger('mesh')


class ElementKind(Enum):
    CONVEX = 0
    CONCAVE = 1
    DEGENERATE = 2


@dataclass(frozen=True)
class ElementClass:
    """Classification of one element."""

    kind: ElementKind
    reentrant_local: Optional[int] = None

    @property
    def is_concave(self) -> bool:
        return self.kind is ElementKind.CONCAVE

    @property
    def code(self) -> int:
        """Integer tag written to VTK cell data."""
        return self.kind.value

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.name.lower(), 'reentrant_local': self.reentrant_local}


CONVEX = ElementClass(ElementKind.CONVEX)
DEGENERATE = ElementClass(ElementKind.DEGENERATE)


def corner_crosses(coords: np.ndarray) -> np.ndarray:
    """
    Cross products of the edge vectors leaving each corner.

    Args:
        coords: (..., 4, 2) corner coordinates in polygon order

    Returns:
        (..., 4) values; positive at a convex CCW corner. Equal to 4·det J at that corner.
    """
    nxt = np.roll(coords, -1, axis=-2) - coords
    prv = np.roll(coords, 1, axis=-2) - coords
    return nxt[..., 0] * prv[..., 1] - nxt[..., 1] * prv[..., 0]


def _classify_coords(coords: np.ndarray, element: int) -> ElementClass:
    cross = corner_crosses(coords)
    diag2 = float(np.sum(np.ptp(coords, axis=0) ** 2))
    if np.any(np.abs(cross) <= EPS_GEOM * diag2):
        return DEGENERATE
    negative = np.flatnonzero(cross < 0.0)
    if negative.size == 0:
        return CONVEX
    if negative.size == 1:
        return ElementClass(ElementKind.CONCAVE, int(negative[0]))
    raise SelfIntersecting(element, int(negative.size))


def classify_element(mesh: QuadMesh, e: int) -> ElementClass:
    """
    Classify element e as convex, concave (with its re-entrant corner) or degenerate.

    Raises:
        SelfIntersecting: two or more corners have a negative cross product
    """
    return _classify_coords(mesh.element_coords(e), e)


def classify_coords(coords: np.ndarray) -> ElementClass:
    """Classify a standalone quad given by (4, 2) coordinates."""
    return _classify_coords(np.asarray(coords, dtype=float), -1)


@dataclass
class TangleReport:
    """Classification of every element of a mesh."""

    classes: List[ElementClass]
    min_corner_jacobian: float
    concave: np.ndarray = field(init=False)

    def __post_init__(self):
        self.concave = np.array(
            [e for e, c in enumerate(self.classes) if c.is_concave], dtype=np.int64
        )

    @property
    def concave_count(self) -> int:
        return len(self.concave)

    @property
    def degenerate(self) -> np.ndarray:
        return np.array(
            [e for e, c in enumerate(self.classes) if c.kind is ElementKind.DEGENERATE], dtype=np.int64
        )

    @property
    def convex(self) -> np.ndarray:
        return np.array(
            [e for e, c in enumerate(self.classes) if c.kind is ElementKind.CONVEX], dtype=np.int64
        )

    @property
    def is_tangled(self) -> bool:
        return self.concave_count > 0

    def codes(self) -> np.ndarray:
        return np.array([c.code for c in self.classes], dtype=np.int64)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'elements': len(self.classes),
            'concave_count': self.concave_count,
            'degenerate_count': int(len(self.degenerate)),
            'min_corner_jacobian': self.min_corner_jacobian,
            'concave_elements': self.concave.tolist(),
        }


def classify_mesh(mesh: QuadMesh) -> TangleReport:
    """Classify every element; SelfIntersecting carries the offending element id."""
    coords = mesh.all_element_coords()
    classes = [_classify_coords(coords[e], e) for e in range(mesh.n_elems)]
    min_jac = float(np.min(corner_crosses(coords))) / 4.0 if mesh.n_elems else 0.0
    report = TangleReport(classes=classes, min_corner_jacobian=min_jac)
    logger.debug(f"Classified {mesh.n_elems} elements: {report.concave_count} concave")
    return report
