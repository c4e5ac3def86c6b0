"""
Legacy ASCII VTK unstructured-grid snapshots.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from mesh.quad_mesh import QuadMesh

logger = logging.getLogger('storage')

VTK_QUAD = 9


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


@dataclass
class VtkSnapshot:
    """Reference coordinates, quad cells, nodal displacement and cell scalars."""

    points: np.ndarray
    cells: np.ndarray
    displacement: np.ndarray
    cell_scalars: Dict[str, np.ndarray] = field(default_factory=dict)
    title: str = 'tangled-fem snapshot'

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 4)
        self.displacement = np.asarray(self.displacement, dtype=float).reshape(-1, 2)
        if len(self.displacement) != len(self.points):
            raise ValueError(f"{len(self.displacement)} displacement vectors for {len(self.points)} points")
        for name, values in self.cell_scalars.items():
            if len(values) != len(self.cells):
                raise ValueError(f"Cell scalar '{name}' has {len(values)} values for {len(self.cells)} cells")

    @classmethod
    def from_mesh(cls, mesh: QuadMesh, u: Optional[np.ndarray] = None,
                  cell_scalars: Optional[Dict[str, np.ndarray]] = None) -> 'VtkSnapshot':
        u = np.zeros(mesh.n_dofs) if u is None else np.asarray(u, dtype=float)
        return cls(mesh.nodes, mesh.elems, u.reshape(-1, 2), dict(cell_scalars or {}))

    def render(self) -> str:
        lines = ['# vtk DataFile Version 3.0', self.title, 'ASCII', 'DATASET UNSTRUCTURED_GRID']
        lines.append(f"POINTS {len(self.points)} double")
        lines.extend(f"{_fmt(x)} {_fmt(y)} 0" for x, y in self.points)
        lines.append(f"CELLS {len(self.cells)} {5 * len(self.cells)}")
        lines.extend('4 ' + ' '.join(str(int(n)) for n in cell) for cell in self.cells)
        lines.append(f"CELL_TYPES {len(self.cells)}")
        lines.extend(str(VTK_QUAD) for _ in self.cells)
        lines.append(f"POINT_DATA {len(self.points)}")
        lines.append('VECTORS displacement double')
        lines.extend(f"{_fmt(ux)} {_fmt(uy)} 0" for ux, uy in self.displacement)
        if self.cell_scalars:
            lines.append(f"CELL_DATA {len(self.cells)}")
            for name, values in self.cell_scalars.items():
                integer = np.issubdtype(np.asarray(values).dtype, np.integer)
                lines.append(f"SCALARS {name} {'int' if integer else 'double'} 1")
                lines.append('LOOKUP_TABLE default')
                lines.extend(str(int(v)) if integer else _fmt(v) for v in values)
        return '\n'.join(lines) + '\n'


def write_vtk(mesh: QuadMesh, fields: Dict[str, np.ndarray], path) -> Path:
    """
    Write a snapshot of `mesh`.

    `fields` holds 'displacement' (n_dofs or (n, 2)) and any per-cell scalars
    such as 'class', 'min_detJ' and 'det_Fbar'.
    """
    fields = dict(fields)
    u = fields.pop('displacement', None)
    snapshot = VtkSnapshot.from_mesh(mesh, u, fields)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='\n') as f:
        f.write(snapshot.render())
    logger.debug(f"Wrote VTK snapshot {path}")
    return path
