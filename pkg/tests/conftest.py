"""
Shared fixtures for the tangled FEM test suite.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from core.material import GeneralizedNeoHookean, StVenantKirchhoff  # noqa: E402
from mesh.generators import gen_cooks, gen_patch, gen_punch  # noqa: E402

REPO_ROOT = Path(__file__).parent.parent

# Concave quad with its re-entrant vertex at local corner 2.
CONCAVE_QUAD = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.3], [0.0, 1.0]])
UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
SKEWED_QUAD = np.array([[0.0, 0.0], [2.0, 0.2], [2.3, 1.7], [-0.1, 1.2]])


def random_deformation(rng: np.random.Generator, size: float = 0.2) -> np.ndarray:
    """Deformation gradient near identity with positive determinant."""
    while True:
        F = np.eye(2) + size * rng.standard_normal((2, 2))
        if np.linalg.det(F) > 0.2:
            return F


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def concave_quad():
    return CONCAVE_QUAD.copy()


@pytest.fixture
def unit_square():
    return UNIT_SQUARE.copy()


@pytest.fixture
def skewed_quad():
    return SKEWED_QUAD.copy()


@pytest.fixture
def neo_hookean():
    return GeneralizedNeoHookean(mu=500.0, K=1700.0)


@pytest.fixture
def stvk():
    return StVenantKirchhoff(lam=100.0, mu=50.0)


@pytest.fixture
def patch_mesh():
    return gen_patch(0.75)


@pytest.fixture
def cook_regular():
    return gen_cooks(2)


@pytest.fixture
def cook_tangled():
    return gen_cooks(3, 'checkerboard')


@pytest.fixture
def punch_block():
    return gen_punch(2, 'block_center')


@pytest.fixture
def work_config(tmp_path):
    """Minimal run configuration writing into a temporary directory."""
    return {
        'problem': {'preset': 'patch', 'n': 0},
        'tangle': {'kind': 'block_center', 'magnitude': 0.75},
        'material': {},
        'solver': {'load_steps': 1, 'deterministic': True},
        'probes': {},
        'outputs': {'directory': str(tmp_path / 'results'), 'name': 'patch',
                    'vtk': True, 'csv': True, 'probe_log': True},
        'logging': {'logs_directory': str(tmp_path / 'logs')},
    }
