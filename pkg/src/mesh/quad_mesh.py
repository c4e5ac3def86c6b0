"""
Q4 mesh data model.
"""

from dataclasses import dataclass, field
from typing import Dict, Any, NamedTuple, Optional

import numpy as np

from utils.errors import IndexOutOfRange, MeshError, UnknownSet


class Point2(NamedTuple):
    """Reference-configuration point."""

    x: float
    y: float


def shoelace_areas(coords: np.ndarray) -> np.ndarray:
    """Signed polygon areas of quads given as (..., 4, 2) corner arrays."""
    x = coords[..., 0]
    y = coords[..., 1]
    xn = np.roll(x, -1, axis=-1)
    yn = np.roll(y, -1, axis=-1)
    return 0.5 * np.sum(x * yn - xn * y, axis=-1)


@dataclass(eq=False)
class QuadMesh:
    """Bilinear quadrilateral mesh; immutable after construction."""

    nodes: np.ndarray
    elems: np.ndarray
    node_sets: Dict[str, np.ndarray] = field(default_factory=dict)
    edge_sets: Dict[str, np.ndarray] = field(default_factory=dict)
    domain_area: Optional[float] = None

    def __post_init__(self):
        self.nodes = np.array(self.nodes, dtype=float).reshape(-1, 2)
        self.elems = np.array(self.elems, dtype=np.int64).reshape(-1, 4)

        if not np.all(np.isfinite(self.nodes)):
            raise MeshError("Node coordinates must be finite")

        n = len(self.nodes)
        if self.elems.size and (self.elems.min() < 0 or self.elems.max() >= n):
            bad = int(np.argmax((self.elems < 0).any(axis=1) | (self.elems >= n).any(axis=1)))
            raise IndexOutOfRange(f"Element {bad} references a node outside 0..{n - 1}")

        for e, row in enumerate(self.elems):
            if len(set(row.tolist())) != 4:
                raise MeshError(f"Element {e} repeats a node: {row.tolist()}")

        node_sets = {}
        for name, ids in self.node_sets.items():
            ids = np.array(ids, dtype=np.int64).reshape(-1)
            if ids.size and (ids.min() < 0 or ids.max() >= n):
                raise IndexOutOfRange(f"Node set '{name}' references a node outside 0..{n - 1}")
            ids.setflags(write=False)
            node_sets[name] = ids
        self.node_sets = node_sets

        edge_sets = {}
        for name, pairs in self.edge_sets.items():
            pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
            if pairs.size:
                if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= len(self.elems):
                    raise IndexOutOfRange(f"Edge set '{name}' references a missing element")
                if pairs[:, 1].min() < 0 or pairs[:, 1].max() > 3:
                    raise MeshError(f"Edge set '{name}' has a local edge outside 0..3")
            pairs.setflags(write=False)
            edge_sets[name] = pairs
        self.edge_sets = edge_sets

        if self.domain_area is None:
            self.domain_area = float(np.sum(self.signed_areas()))

        self.nodes.setflags(write=False)
        self.elems.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elems(self) -> int:
        return len(self.elems)

    @property
    def n_dofs(self) -> int:
        return 2 * len(self.nodes)

    def element_coords(self, e: int) -> np.ndarray:
        """Corner coordinates (4, 2) of element e."""
        return self.nodes[self.elems[e]]

    def all_element_coords(self) -> np.ndarray:
        """Corner coordinates (m, 4, 2) of every element."""
        return self.nodes[self.elems]

    def signed_areas(self) -> np.ndarray:
        return shoelace_areas(self.all_element_coords())

    def coverage_error(self) -> float:
        """Relative mismatch between the signed-area sum and the domain area."""
        return abs(float(np.sum(self.signed_areas())) - self.domain_area) / abs(self.domain_area)

    def check_coverage(self, rtol: float = 1e-10) -> bool:
        return self.coverage_error() <= rtol

    @property
    def bbox(self) -> np.ndarray:
        """[[xmin, ymin], [xmax, ymax]]"""
        return np.array([self.nodes.min(axis=0), self.nodes.max(axis=0)])

    @property
    def characteristic_size(self) -> float:
        """Square root of the mean element area."""
        return float(np.sqrt(abs(self.domain_area) / max(self.n_elems, 1)))

    def node_set(self, name: str) -> np.ndarray:
        if name not in self.node_sets:
            raise UnknownSet(name)
        return self.node_sets[name]

    def edge_set(self, name: str) -> np.ndarray:
        if name not in self.edge_sets:
            raise UnknownSet(name)
        return self.edge_sets[name]

    def edge_nodes(self, name: str) -> np.ndarray:
        """Node pairs (k, 2) of an edge set, ordered along the element boundary."""
        pairs = self.edge_set(name)
        first = self.elems[pairs[:, 0], pairs[:, 1]]
        second = self.elems[pairs[:, 0], (pairs[:, 1] + 1) % 4]
        return np.stack([first, second], axis=1)

    def find_node(self, point, tol: float = 1e-9) -> Optional[int]:
        """Index of the node at `point`, or None."""
        scale = max(float(np.max(np.ptp(self.nodes, axis=0))), 1.0)
        d = np.linalg.norm(self.nodes - np.asarray(point, dtype=float), axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= tol * scale else None

    def with_nodes(self, nodes: np.ndarray) -> 'QuadMesh':
        """Same topology and sets, new coordinates; domain area is kept."""
        return QuadMesh(
            nodes=nodes,
            elems=self.elems.copy(),
            node_sets={k: v.copy() for k, v in self.node_sets.items()},
            edge_sets={k: v.copy() for k, v in self.edge_sets.items()},
            domain_area=self.domain_area,
        )

    def equals(self, other: 'QuadMesh', rtol: float = 0.0) -> bool:
        """Exact (or rtol-close) equality of coordinates, connectivity and sets."""
        if self.nodes.shape != other.nodes.shape or not np.array_equal(self.elems, other.elems):
            return False
        if rtol == 0.0:
            same_nodes = np.array_equal(self.nodes, other.nodes)
        else:
            same_nodes = np.allclose(self.nodes, other.nodes, rtol=rtol, atol=0.0)
        if not same_nodes:
            return False
        if self.node_sets.keys() != other.node_sets.keys() or self.edge_sets.keys() != other.edge_sets.keys():
            return False
        return (all(np.array_equal(v, other.node_sets[k]) for k, v in self.node_sets.items())
                and all(np.array_equal(v, other.edge_sets[k]) for k, v in self.edge_sets.items()))

    def summary(self) -> Dict[str, Any]:
        return {
            'nodes': self.n_nodes,
            'elements': self.n_elems,
            'node_sets': sorted(self.node_sets),
            'edge_sets': sorted(self.edge_sets),
            'domain_area': self.domain_area,
        }
