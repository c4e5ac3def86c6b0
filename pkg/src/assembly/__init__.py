"""Element kernels, loads and global i-TFEM system assembly."""

from assembly.elements import element_internal_concave, element_internal_convex
from assembly.loads import DirichletSpec, EdgeTraction, LoadCase
from assembly.system import (
    AssembledSystem, Discretization, DofMap, State, SystemAssembler, assemble, constraint_matrix,
    external_force, total_potential,
)

__all__ = [
    'element_internal_concave', 'element_internal_convex',
    'DirichletSpec', 'EdgeTraction', 'LoadCase',
    'AssembledSystem', 'Discretization', 'DofMap', 'State', 'SystemAssembler', 'assemble',
    'constraint_matrix', 'external_force', 'total_potential',
]
