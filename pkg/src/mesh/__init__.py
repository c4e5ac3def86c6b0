"""Q4 mesh model, classification, generators and file format."""

from mesh.quad_mesh import Point2, QuadMesh, shoelace_areas
from mesh.classify import (
    ElementClass, ElementKind, TangleReport, classify_coords, classify_element, classify_mesh,
)
from mesh.generators import (
    TangleSpec, gen_cooks, gen_patch, gen_punch, gen_thin_beam, generate,
)
from mesh.mesh_io import read_mesh, write_mesh

__all__ = [
    'Point2', 'QuadMesh', 'shoelace_areas',
    'ElementClass', 'ElementKind', 'TangleReport', 'classify_coords', 'classify_element', 'classify_mesh',
    'TangleSpec', 'gen_cooks', 'gen_patch', 'gen_punch', 'gen_thin_beam', 'generate',
    'read_mesh', 'write_mesh',
]
