"""
Benchmark mesh generators and parametric tangling transforms.

All generators are pure functions returning a new QuadMesh. Node (i, j) of an
nx × ny structured grid has index j·(nx + 1) + i; cell (i, j) has index j·nx + i
and corners (i, j), (i+1, j), (i+1, j+1), (i, j+1) in counter-clockwise order.
"""

from dataclasses import dataclass
from typing import Dict, Any, Callable, Optional, Tuple

import numpy as np

from mesh.quad_mesh import QuadMesh, shoelace_areas
from utils.errors import ConfigError

COOK_CORNERS = np.array([[0.0, 0.0], [48.0, 44.0], [48.0, 60.0], [0.0, 44.0]])
PUNCH_HEIGHT = 1.0
BEAM_LENGTH = 100.0
BEAM_HEIGHT = 1.0

DEFAULT_MAGNITUDES = {
    'none': 0.0,
    'single': 0.3,
    'checkerboard': 0.55,
    'pairwise': 0.55,
    'block_center': 0.75,
    'split_pair': 0.02,
}

# Kinds built by split_pairs; checkerboard and pairwise halve the grid rows first
# so the element count matches the untangled mesh.
SPLIT_KINDS = ('checkerboard', 'pairwise', 'split_pair')
HALVED_KINDS = ('checkerboard', 'pairwise')


@dataclass(frozen=True)
class TangleSpec:
    """Tangling transform and its magnitude (d for single, t otherwise)."""

    kind: str = 'none'
    magnitude: float = 0.0

    @classmethod
    def parse(cls, value: Any) -> 'TangleSpec':
        """Accept 'none', 'single', 'single:0.25', a dict or a TangleSpec."""
        if isinstance(value, TangleSpec):
            return value
        if value is None:
            return cls()
        if isinstance(value, dict):
            kind = str(value.get('kind', 'none'))
            magnitude = value.get('magnitude', value.get('d', value.get('t')))
        else:
            text = str(value)
            kind, _, mag = text.partition(':')
            magnitude = float(mag) if mag else None
        if kind not in DEFAULT_MAGNITUDES:
            raise ConfigError(
                f"Unknown tangle '{kind}'; expected one of {sorted(DEFAULT_MAGNITUDES)}"
            )
        if magnitude is None:
            magnitude = DEFAULT_MAGNITUDES[kind]
        return cls(kind, float(magnitude))

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'magnitude': self.magnitude}

    def __str__(self) -> str:
        return self.kind if self.kind == 'none' else f"{self.kind}:{self.magnitude:g}"


def _node(nx: int, i: int, j: int) -> int:
    return j * (nx + 1) + i


def structured_grid(nx: int, ny: int, mapping: Callable[[np.ndarray, np.ndarray], np.ndarray],
                    domain_area: float) -> QuadMesh:
    """
    Structured nx × ny grid over the image of the unit square.

    Args:
        mapping: (s, t) arrays in [0, 1] -> (..., 2) physical coordinates
        domain_area: exact area of the mapped domain

    Node sets: left, right, bottom, top and the four corners
    (bottom_left, bottom_right, top_right, top_left).
    Edge sets: left, right, bottom, top.
    """
    s, t = np.meshgrid(np.linspace(0.0, 1.0, nx + 1), np.linspace(0.0, 1.0, ny + 1))
    nodes = mapping(s.ravel(), t.ravel())

    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing='ij')
    ii = ii.ravel()
    jj = jj.ravel()
    elems = np.stack([
        _node(nx, ii, jj), _node(nx, ii + 1, jj), _node(nx, ii + 1, jj + 1), _node(nx, ii, jj + 1)
    ], axis=1)

    cols = np.arange(nx + 1)
    rows = np.arange(ny + 1)
    node_sets = {
        'left': _node(nx, 0, rows),
        'right': _node(nx, nx, rows),
        'bottom': _node(nx, cols, 0),
        'top': _node(nx, cols, ny),
        'bottom_left': [_node(nx, 0, 0)],
        'bottom_right': [_node(nx, nx, 0)],
        'top_right': [_node(nx, nx, ny)],
        'top_left': [_node(nx, 0, ny)],
    }
    cells_x = np.arange(nx)
    cells_y = np.arange(ny)
    edge_sets = {
        'bottom': np.stack([cells_x, np.zeros(nx, dtype=int)], axis=1),
        'right': np.stack([cells_y * nx + nx - 1, np.ones(ny, dtype=int)], axis=1),
        'top': np.stack([(ny - 1) * nx + cells_x, np.full(nx, 2)], axis=1),
        'left': np.stack([cells_y * nx, np.full(ny, 3)], axis=1),
    }
    return QuadMesh(nodes, elems, node_sets, edge_sets, domain_area)


def _bilinear_patch(corners: np.ndarray) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    def mapping(s, t):
        w = np.stack([(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t], axis=-1)
        return w @ corners
    return mapping


def _rectangle(width: float, height: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    def mapping(s, t):
        return np.stack([width * s, height * t], axis=-1)
    return mapping


def _check_magnitude(spec: TangleSpec):
    if spec.kind == 'single':
        if not 0.0 <= spec.magnitude < 0.5:
            raise ConfigError(f"single tangle requires d in [0, 0.5), got {spec.magnitude}")
    elif spec.kind in SPLIT_KINDS:
        if not 0.0 < spec.magnitude < 1.0:
            raise ConfigError(f"{spec.kind} tangle requires t in (0, 1), got {spec.magnitude}")
    elif spec.kind == 'block_center':
        if not 0.0 <= spec.magnitude < 1.0:
            raise ConfigError(f"{spec.kind} tangle requires t in [0, 1), got {spec.magnitude}")


def _local_frame(nodes: np.ndarray, nx: int, i: int, j: int) -> Tuple[np.ndarray, np.ndarray]:
    """Half-spans of the grid lines through interior node (i, j)."""
    ex = 0.5 * (nodes[_node(nx, i + 1, j)] - nodes[_node(nx, i - 1, j)])
    ey = 0.5 * (nodes[_node(nx, i, j + 1)] - nodes[_node(nx, i, j - 1)])
    return ex, ey


def _line_intersection(p: np.ndarray, q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Intersection of line p→q with line a→b."""
    m = np.column_stack([q - p, a - b])
    s, _ = np.linalg.solve(m, a - p)
    return p + s * (q - p)


def tangle_single(mesh: QuadMesh, nx: int, ny: int, d: float) -> QuadMesh:
    """
    Split one cell into a concave/convex pair around a private node D.

    The host is the lower-left cell of the interior node nearest the domain centroid.
    With B the host's lower-right corner and Q the crossing of the host diagonals,
    D = B + (0.5 - d)(C - B) where C = B + 2(Q - B); d = 0 puts D on the other
    diagonal. The host index becomes the concave quad (B, P2, D, P4) and the convex
    quad (D, P2, P3, P4) is appended, so edge sets keep their element indices.
    """
    nodes = mesh.nodes
    areas = mesh.signed_areas()
    centers = mesh.all_element_coords().mean(axis=1)
    centroid = (areas[:, None] * centers).sum(axis=0) / areas.sum()

    best, best_dist = None, np.inf
    for j in range(1, ny):
        for i in range(1, nx):
            dist = float(np.linalg.norm(nodes[_node(nx, i, j)] - centroid))
            if dist < best_dist:
                best, best_dist = (i, j), dist
    i, j = best

    host = (j - 1) * nx + (i - 1)
    p4, b_id, p2, p3 = (int(k) for k in mesh.elems[host])
    b = nodes[b_id]
    q = _line_intersection(b, nodes[p3], nodes[p2], nodes[p4])
    c = b + 2.0 * (q - b)
    d_id = len(nodes)

    elems = np.array(mesh.elems)
    elems[host] = (b_id, p2, d_id, p4)
    return QuadMesh(
        nodes=np.vstack([nodes, b + (0.5 - d) * (c - b)]),
        elems=np.vstack([elems, [(d_id, p2, p3, p4)]]),
        node_sets={k: v.copy() for k, v in mesh.node_sets.items()},
        edge_sets={k: v.copy() for k, v in mesh.edge_sets.items()},
        domain_area=mesh.domain_area,
    )


def tangle_block_center(mesh: QuadMesh, nx: int, ny: int, t: float) -> QuadMesh:
    """Shift the center node of every 2×2 cell block diagonally by t·(ex + ey)."""
    nodes = np.array(mesh.nodes)
    for j in range(1, ny, 2):
        for i in range(1, nx, 2):
            ex, ey = _local_frame(mesh.nodes, nx, i, j)
            nodes[_node(nx, i, j)] += t * (ex + ey)
    return mesh.with_nodes(nodes)


def split_pairs(mesh: QuadMesh, t: float) -> QuadMesh:
    """
    Replace every cell (P1, P2, P3, P4) by a concave quad (P1, P2, R, P4) and a convex
    quad (R, P2, P3, P4).

    The private node R = P1 + t·(M - P1) lies on the segment from P1 to the midpoint M
    of diagonal P2–P4, so 0 < t < 1 keeps it inside triangle (P1, P2, P4). Cell c
    becomes elements 2c (concave) and 2c + 1 (convex).
    """
    grid = mesh.nodes
    cells = mesh.elems
    p1 = grid[cells[:, 0]]
    mid = 0.5 * (grid[cells[:, 1]] + grid[cells[:, 3]])
    private = p1 + t * (mid - p1)
    r_ids = len(grid) + np.arange(len(cells))

    elems = np.empty((2 * len(cells), 4), dtype=np.int64)
    elems[0::2] = np.stack([cells[:, 0], cells[:, 1], r_ids, cells[:, 3]], axis=1)
    elems[1::2] = np.stack([r_ids, cells[:, 1], cells[:, 2], cells[:, 3]], axis=1)

    remap_edge = {0: (0, 0), 3: (0, 3), 1: (1, 1), 2: (1, 2)}
    edge_sets = {}
    for name, pairs in mesh.edge_sets.items():
        rows = [(2 * int(c) + remap_edge[int(le)][0], remap_edge[int(le)][1]) for c, le in pairs]
        edge_sets[name] = np.array(rows, dtype=np.int64).reshape(-1, 2)

    return QuadMesh(
        nodes=np.vstack([grid, private]),
        elems=elems,
        node_sets={k: v.copy() for k, v in mesh.node_sets.items()},
        edge_sets=edge_sets,
        domain_area=mesh.domain_area,
    )


def apply_tangle(mesh: QuadMesh, nx: int, ny: int, spec: TangleSpec) -> QuadMesh:
    """Dispatch a tangling transform on a structured grid."""
    _check_magnitude(spec)
    if spec.kind == 'none':
        return mesh
    if spec.kind == 'single':
        return tangle_single(mesh, nx, ny, spec.magnitude)
    if spec.kind in SPLIT_KINDS:
        return split_pairs(mesh, spec.magnitude)
    if spec.kind == 'block_center':
        return tangle_block_center(mesh, nx, ny, spec.magnitude)
    raise ConfigError(f"Unknown tangle '{spec.kind}'")


def _require(spec: TangleSpec, allowed: Tuple[str, ...], preset: str):
    if spec.kind not in allowed:
        raise ConfigError(f"Tangle '{spec.kind}' is not available for {preset}; expected one of {list(allowed)}")


def gen_cooks(n: int, tangle: Any = None) -> QuadMesh:
    """
    Cook's membrane, 2^n × 2^n transfinite grid.

    checkerboard and pairwise split the cells of a 2^n × 2^(n-1) grid, giving the
    same 4^n elements with every other one concave.

    Args:
        n: mesh index, n >= 1
        tangle: none | single{d} | checkerboard{t}
    """
    if n < 1:
        raise ConfigError(f"Cook mesh index must be >= 1, got {n}")
    spec = TangleSpec.parse(tangle)
    _require(spec, ('none', 'single', 'checkerboard', 'pairwise'), 'cooks')
    nx = ny = 2 ** n
    if spec.kind in HALVED_KINDS:
        ny //= 2
    area = float(shoelace_areas(COOK_CORNERS))
    mesh = structured_grid(nx, ny, _bilinear_patch(COOK_CORNERS), area)
    return apply_tangle(mesh, nx, ny, spec)


def gen_punch(n: int, tangle: Any = None) -> QuadMesh:
    """
    Punch block of width 2H and height H, 2^(n+1) × 2^n grid.

    Extra edge set `top_left` holds the top edges over 0 <= x <= H. pairwise and
    checkerboard split a grid with half as many rows.
    """
    if n < 1:
        raise ConfigError(f"Punch mesh index must be >= 1, got {n}")
    spec = TangleSpec.parse(tangle)
    _require(spec, ('none', 'pairwise', 'checkerboard', 'block_center'), 'punch')
    nx, ny = 2 ** (n + 1), 2 ** n
    if spec.kind in HALVED_KINDS:
        ny //= 2
    width = 2.0 * PUNCH_HEIGHT
    mesh = structured_grid(nx, ny, _rectangle(width, PUNCH_HEIGHT), width * PUNCH_HEIGHT)
    top = mesh.edge_sets['top']
    edge_sets = dict(mesh.edge_sets)
    edge_sets['top_left'] = top[: nx // 2]
    mesh = QuadMesh(mesh.nodes, mesh.elems, mesh.node_sets, edge_sets, mesh.domain_area)
    return apply_tangle(mesh, nx, ny, spec)


def gen_thin_beam(n: int, tangle: Any = None) -> QuadMesh:
    """Thin beam L = 100, H = 1, (10·2^n) × 2^n grid; split_pair doubles the elements."""
    if n < 0:
        raise ConfigError(f"Beam mesh index must be >= 0, got {n}")
    spec = TangleSpec.parse(tangle)
    _require(spec, ('none', 'split_pair'), 'thin_beam')
    nx, ny = 10 * 2 ** n, 2 ** n
    mesh = structured_grid(nx, ny, _rectangle(BEAM_LENGTH, BEAM_HEIGHT), BEAM_LENGTH * BEAM_HEIGHT)
    return apply_tangle(mesh, nx, ny, spec)


def gen_patch(t: float = 0.75, size: float = 1.0) -> QuadMesh:
    """
    Four-element patch on a square: 2×2 cells with the center node shifted by t·(h, h).

    Node sets: boundary (the eight outer nodes) and center.
    """
    if not 0.0 <= t < 1.0:
        raise ConfigError(f"patch tangle requires t in [0, 1), got {t}")
    mesh = structured_grid(2, 2, _rectangle(size, size), size * size)
    boundary = np.array([0, 1, 2, 3, 5, 6, 7, 8])
    node_sets = dict(mesh.node_sets)
    node_sets['boundary'] = boundary
    node_sets['center'] = np.array([4])
    mesh = QuadMesh(mesh.nodes, mesh.elems, node_sets, mesh.edge_sets, mesh.domain_area)
    return tangle_block_center(mesh, 2, 2, t)


GENERATORS: Dict[str, Callable[..., QuadMesh]] = {
    'cooks': gen_cooks,
    'punch': gen_punch,
    'thin_beam': gen_thin_beam,
}


def generate(preset: str, n: int, tangle: Optional[Any] = None) -> QuadMesh:
    """Build a preset mesh by name."""
    if preset == 'patch':
        spec = TangleSpec.parse(tangle if tangle is not None else 'block_center')
        return gen_patch(spec.magnitude if spec.kind != 'none' else 0.0)
    if preset not in GENERATORS:
        raise ConfigError(f"Unknown preset '{preset}'; expected one of {sorted(list(GENERATORS) + ['patch'])}")
    return GENERATORS[preset](n, tangle)
