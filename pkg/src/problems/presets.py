"""
Benchmark problems: mesh, load case, default material and probes.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from assembly.loads import DirichletSpec, EdgeTraction, LoadCase
from core.material import MaterialModel, build_material
from mesh.generators import BEAM_HEIGHT, TangleSpec, gen_cooks, gen_patch, gen_punch, gen_thin_beam
from mesh.mesh_io import read_mesh
from mesh.quad_mesh import QuadMesh
from utils.errors import ConfigError

logger = logging.getLogger('tangled_fem')

COOK_LOAD = 5.0
PUNCH_LOAD = 1000.0
BEAM_FORCE = 0.1

DEFAULT_MATERIALS: Dict[str, Dict[str, Any]] = {
    'cooks': {'model': 'stvk', 'lam': 100.0, 'mu': 50.0},
    'punch': {'model': 'neo_hookean', 'mu': 500.0, 'K': 1700.0},
    'thin_beam': {'model': 'neo_hookean', 'mu': 6000.0, 'K': 16000.0},
    'patch': {'model': 'neo_hookean', 'mu': 500.0, 'K': 1700.0},
    'imported': {'model': 'stvk', 'E': 20.0, 'nu': 0.3},
}

# probe name -> (node set holding a single node, component)
DEFAULT_PROBES: Dict[str, Dict[str, Tuple[str, int]]] = {
    'cooks': {'A_uy': ('top_right', 1)},
    'punch': {'top_left_uy': ('top_left', 1)},
    'thin_beam': {'tip_uy': ('top_right', 1)},
    'patch': {'center_ux': ('center', 0), 'center_uy': ('center', 1)},
    'imported': {},
}


@dataclass
class Problem:
    """A ready-to-solve boundary value problem."""

    name: str
    n: int
    mesh: QuadMesh
    loadcase: LoadCase
    material: MaterialModel
    probes: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    tangle: TangleSpec = field(default_factory=TangleSpec)
    h_length: Optional[float] = None

    @property
    def h(self) -> float:
        """Cell size of the underlying grid; halves as n increments."""
        if self.h_length is None:
            return self.mesh.characteristic_size
        return self.h_length / 2 ** self.n

    def summary(self) -> Dict[str, Any]:
        return {
            'problem': self.name,
            'n': self.n,
            'tangle': str(self.tangle),
            'material': self.material.to_dict(),
            'mesh': self.mesh.summary(),
            'probes': {k: list(v) for k, v in self.probes.items()},
        }


def resolve_probes(mesh: QuadMesh, probes: Dict[str, Any]) -> Dict[str, Tuple[int, int]]:
    """
    Nodal probes from node-set names or coordinates.

    Each value is (node_set, component) or {'point': [x, y], 'component': c}.

    Raises:
        UnknownSet: missing node set
        ConfigError: coordinates that match no node
    """
    resolved = {}
    for name, spec in probes.items():
        if isinstance(spec, dict) and 'point' in spec:
            node = mesh.find_node(spec['point'])
            if node is None:
                raise ConfigError(f"Probe '{name}': no node at {spec['point']}")
            resolved[name] = (node, int(spec.get('component', 1)))
        else:
            set_name, comp = (spec['node_set'], spec.get('component', 1)) if isinstance(spec, dict) else spec
            resolved[name] = (int(mesh.node_set(set_name)[0]), int(comp))
    return resolved


def _material(preset: str, material: Optional[Dict[str, Any]]) -> MaterialModel:
    spec = dict(DEFAULT_MATERIALS[preset])
    if material:
        if material.get('model', spec['model']) != spec['model'] or any(
                k in material for k in ('E', 'nu', 'K', 'mu', 'lam')):
            spec = {'model': material.get('model', spec['model'])}
        spec.update(material)
    return build_material(spec)


def cooks_problem(n: int, tangle: Any = None, material: Optional[Dict[str, Any]] = None) -> Problem:
    """Cook's membrane: left edge clamped, uniform upward shear on the right edge."""
    mesh = gen_cooks(n, tangle)
    loadcase = LoadCase(
        tractions=[EdgeTraction('right', (0.0, COOK_LOAD))],
        dirichlet=[DirichletSpec('left', (0, 1))],
    )
    return Problem('cooks', n, mesh, loadcase, _material('cooks', material),
                   resolve_probes(mesh, DEFAULT_PROBES['cooks']), TangleSpec.parse(tangle), h_length=48.0)


def punch_problem(n: int, tangle: Any = None, material: Optional[Dict[str, Any]] = None) -> Problem:
    """Punch: pressure on the left half of the top; top and left sliding in y, bottom sliding in x."""
    mesh = gen_punch(n, tangle)
    loadcase = LoadCase(
        tractions=[EdgeTraction('top_left', (0.0, -PUNCH_LOAD))],
        dirichlet=[
            DirichletSpec('top', (0,)),
            DirichletSpec('left', (0,)),
            DirichletSpec('bottom', (1,)),
        ],
    )
    return Problem('punch', n, mesh, loadcase, _material('punch', material),
                   resolve_probes(mesh, DEFAULT_PROBES['punch']), TangleSpec.parse(tangle), h_length=1.0)


def thin_beam_problem(n: int, tangle: Any = None, material: Optional[Dict[str, Any]] = None) -> Problem:
    """Cantilever: left end clamped, downward end load F spread over the right edge."""
    mesh = gen_thin_beam(n, tangle)
    loadcase = LoadCase(
        tractions=[EdgeTraction('right', (0.0, -BEAM_FORCE / BEAM_HEIGHT))],
        dirichlet=[DirichletSpec('left', (0, 1))],
    )
    return Problem('thin_beam', n, mesh, loadcase, _material('thin_beam', material),
                   resolve_probes(mesh, DEFAULT_PROBES['thin_beam']), TangleSpec.parse(tangle), h_length=10.0)


def patch_problem(n: int = 0, tangle: Any = None, material: Optional[Dict[str, Any]] = None,
                  F: Any = ((1.1, 0.05), (0.02, 0.95)), c: Any = (0.01, -0.02)) -> Problem:
    """Four-element tangled patch under affine boundary displacement u = (F - I)X + c."""
    spec = TangleSpec.parse(tangle if tangle is not None else 'block_center')
    mesh = gen_patch(spec.magnitude if spec.kind != 'none' else 0.0)
    F = np.asarray(F, dtype=float)
    if np.linalg.det(F) <= 0:
        raise ConfigError("patch affine map needs det F > 0")
    loadcase = LoadCase(dirichlet=[DirichletSpec('boundary', (0, 1), affine={'F': F.tolist(), 'c': list(c)})])
    return Problem('patch', n, mesh, loadcase, _material('patch', material),
                   resolve_probes(mesh, DEFAULT_PROBES['patch']), spec)


def imported_problem(path: str, loadcase: Dict[str, Any], material: Optional[Dict[str, Any]] = None,
                     probes: Optional[Dict[str, Any]] = None) -> Problem:
    """Mesh file with boundary conditions on its named sets."""
    mesh = read_mesh(path)
    case = LoadCase.from_dict(loadcase)
    case.validate(mesh)
    return Problem('imported', 0, mesh, case, _material('imported', material),
                   resolve_probes(mesh, probes or {}), TangleSpec('none', 0.0))


PRESETS: Dict[str, Callable[..., Problem]] = {
    'cooks': cooks_problem,
    'punch': punch_problem,
    'thin_beam': thin_beam_problem,
    'patch': patch_problem,
}


def build_problem(problem_cfg: Dict[str, Any], tangle: Any = None,
                  material: Optional[Dict[str, Any]] = None,
                  probes: Optional[Dict[str, Any]] = None) -> Problem:
    """Problem from the `problem` section of a run configuration."""
    if problem_cfg.get('mesh_path'):
        return imported_problem(problem_cfg['mesh_path'], problem_cfg.get('loadcase', {}), material, probes)
    preset = problem_cfg.get('preset')
    if preset not in PRESETS:
        raise ConfigError(f"Unknown preset '{preset}'; expected one of {sorted(PRESETS)}")
    problem = PRESETS[preset](int(problem_cfg.get('n', 1)), tangle, material)
    if probes:
        problem.probes.update(resolve_probes(problem.mesh, probes))
    logger.debug(f"Built problem {problem.summary()}")
    return problem
