"""
Load cases: dead body force, edge tractions and Dirichlet data.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from mesh.quad_mesh import QuadMesh

logger = logging.getLogger('assembly')

GAUSS_LINE = np.array([-1.0, 1.0]) / np.sqrt(3.0)


@dataclass
class DirichletSpec:
    """
    Prescribed displacement on a node set.

    Either a constant `value` per constrained component, or an affine map
    u(X) = (F - I)·X + c given by `affine = {'F': 2x2, 'c': 2-vector}`.
    Values are reached at load factor 1 and ramp linearly with it.
    """

    node_set: str
    components: Sequence[int] = (0, 1)
    value: Sequence[float] = (0.0, 0.0)
    affine: Optional[Dict[str, Any]] = None

    def displacements(self, points: np.ndarray) -> np.ndarray:
        """Full (k, 2) displacement at the given reference points."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if self.affine is not None:
            F = np.asarray(self.affine.get('F', np.eye(2)), dtype=float)
            c = np.asarray(self.affine.get('c', (0.0, 0.0)), dtype=float)
            return points @ (F - np.eye(2)).T + c
        value = np.broadcast_to(np.asarray(self.value, dtype=float), (2,))
        return np.tile(value, (len(points), 1))

    def to_dict(self) -> Dict[str, Any]:
        data = {'node_set': self.node_set, 'components': list(self.components)}
        if self.affine is not None:
            data['affine'] = {'F': np.asarray(self.affine.get('F', np.eye(2))).tolist(),
                              'c': list(self.affine.get('c', (0.0, 0.0)))}
        else:
            data['value'] = list(np.broadcast_to(np.asarray(self.value, dtype=float), (2,)))
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DirichletSpec':
        value = data.get('value', (0.0, 0.0))
        if np.isscalar(value):
            value = (float(value), float(value))
        return cls(
            node_set=data['node_set'],
            components=tuple(int(c) for c in data.get('components', (0, 1))),
            value=tuple(float(v) for v in value),
            affine=data.get('affine'),
        )


@dataclass
class EdgeTraction:
    """Dead traction (force per unit reference length, unit thickness) on an edge set."""

    edge_set: str
    traction: Sequence[float]

    def to_dict(self) -> Dict[str, Any]:
        return {'edge_set': self.edge_set, 'traction': [float(t) for t in self.traction]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EdgeTraction':
        return cls(edge_set=data['edge_set'], traction=tuple(float(t) for t in data['traction']))


@dataclass
class LoadCase:
    """Body force, edge tractions and Dirichlet specs of one problem."""

    body_force: Sequence[float] = (0.0, 0.0)
    tractions: List[EdgeTraction] = field(default_factory=list)
    dirichlet: List[DirichletSpec] = field(default_factory=list)

    @property
    def has_body_force(self) -> bool:
        return bool(np.any(np.asarray(self.body_force, dtype=float) != 0.0))

    def validate(self, mesh: QuadMesh):
        """Raises UnknownSet for any set missing from the mesh."""
        for t in self.tractions:
            mesh.edge_set(t.edge_set)
        for d in self.dirichlet:
            mesh.node_set(d.node_set)
            bad = [c for c in d.components if c not in (0, 1)]
            if bad:
                raise ValueError(f"Dirichlet components must be 0 or 1, got {bad}")

    def prescribed_values(self, mesh: QuadMesh) -> Dict[int, float]:
        """Global dof -> prescribed value at load factor 1; later specs override earlier ones."""
        self.validate(mesh)
        values: Dict[int, float] = {}
        for spec in self.dirichlet:
            ids = mesh.node_set(spec.node_set)
            u = spec.displacements(mesh.nodes[ids])
            for node, disp in zip(ids, u):
                for c in spec.components:
                    values[2 * int(node) + int(c)] = float(disp[c])
        return values

    def to_dict(self) -> Dict[str, Any]:
        return {
            'body_force': [float(b) for b in self.body_force],
            'tractions': [t.to_dict() for t in self.tractions],
            'dirichlet': [d.to_dict() for d in self.dirichlet],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'LoadCase':
        return cls(
            body_force=tuple(float(b) for b in data.get('body_force', (0.0, 0.0))),
            tractions=[EdgeTraction.from_dict(t) for t in data.get('tractions', [])],
            dirichlet=[DirichletSpec.from_dict(d) for d in data.get('dirichlet', [])],
        )


def traction_force(mesh: QuadMesh, traction: EdgeTraction) -> np.ndarray:
    """Nodal forces (n_dofs,) of one edge traction at full load, 2-point Gauss per edge."""
    f = np.zeros(mesh.n_dofs)
    t = np.asarray(traction.traction, dtype=float)
    pairs = mesh.edge_nodes(traction.edge_set)
    if not len(pairs):
        return f
    length = np.linalg.norm(mesh.nodes[pairs[:, 1]] - mesh.nodes[pairs[:, 0]], axis=1)
    for s in GAUSS_LINE:
        na, nb = 0.5 * (1.0 - s), 0.5 * (1.0 + s)
        jw = 0.5 * length
        for k in range(2):
            np.add.at(f, 2 * pairs[:, 0] + k, na * jw * t[k])
            np.add.at(f, 2 * pairs[:, 1] + k, nb * jw * t[k])
    return f
