"""
Tests for element kernels, loads, the constraint matrix and global assembly.
"""

import numpy as np
import pytest
import scipy.sparse as sp

from assembly.elements import element_internal_concave, element_internal_convex
from assembly.loads import DirichletSpec, EdgeTraction, LoadCase, traction_force
from assembly.system import (
    Discretization, DofMap, State, SystemAssembler, assemble, constraint_matrix, external_force,
    total_potential,
)
from core.param import triangulate_concave
from mesh.classify import classify_mesh
from mesh.generators import gen_cooks
from utils.errors import UnknownSet

FD_STEP = 1e-7


def fd_tangent(residual, u):
    k = np.zeros((len(u), len(u)))
    for d in range(len(u)):
        du = np.zeros(len(u))
        du[d] = FD_STEP
        k[:, d] = (residual(u + du) - residual(u - du)) / (2 * FD_STEP)
    return k


def relative(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def affine_nodal(coords, F, c=(0.0, 0.0)):
    return (np.asarray(coords) @ (np.asarray(F) - np.eye(2)).T + np.asarray(c)).ravel()


def edge_normal_integrals(coords):
    """∮ N_a n ds for a polygon whose edge traces are linear hats."""
    out = np.zeros((4, 2))
    for a in range(4):
        for p, q in ((coords[a], coords[(a + 1) % 4]), (coords[a - 1], coords[a])):
            dx, dy = q - p
            out[a] += 0.5 * np.array([dy, -dx])
    return out


class TestElementKernels:
    @pytest.mark.parametrize('use_fbar', [False, True])
    def test_convex_tangent_matches_finite_differences(self, skewed_quad, neo_hookean, rng, use_fbar):
        u = 0.05 * rng.standard_normal(8)
        _, k = element_internal_convex(skewed_quad, neo_hookean, u, use_fbar)
        fd = fd_tangent(lambda v: element_internal_convex(skewed_quad, neo_hookean, v, use_fbar)[0], u)
        assert relative(k, fd) < 1e-5

    @pytest.mark.parametrize('use_fbar', [False, True])
    def test_concave_tangent_matches_finite_differences(self, concave_quad, stvk, rng, use_fbar):
        quad = triangulate_concave(concave_quad)
        u = 0.02 * rng.standard_normal(8)
        _, k = element_internal_concave(concave_quad, stvk, u, quad, use_fbar)
        fd = fd_tangent(lambda v: element_internal_concave(concave_quad, stvk, v, quad, use_fbar)[0], u)
        assert relative(k, fd) < 1e-5

    def test_symmetric_tangent_without_fbar(self, skewed_quad, neo_hookean, rng):
        _, k = element_internal_convex(skewed_quad, neo_hookean, 0.05 * rng.standard_normal(8))
        assert np.allclose(k, k.T)

    def test_convex_constant_stress_forces(self, skewed_quad, neo_hookean):
        F = np.array([[1.1, 0.05], [0.02, 0.95]])
        r, _ = element_internal_convex(skewed_quad, neo_hookean, affine_nodal(skewed_quad, F))
        P = neo_hookean.pk1(F)
        expected = edge_normal_integrals(skewed_quad) @ P.T
        assert np.allclose(r.reshape(4, 2), expected, atol=1e-10 * np.abs(P).max())

    def test_concave_constant_stress_consistency(self, concave_quad, neo_hookean):
        F = np.array([[1.05, -0.03], [0.04, 0.98]])
        quad = triangulate_concave(concave_quad)
        r, _ = element_internal_concave(concave_quad, neo_hookean, affine_nodal(concave_quad, F), quad)
        forces = r.reshape(4, 2)
        P = neo_hookean.pk1(F)
        # Σ_a r_a = 0 and Σ_a r_a ⊗ X_a = P·area
        assert np.allclose(forces.sum(axis=0), 0.0, atol=1e-10 * np.abs(P).max())
        assert np.allclose(forces.T @ concave_quad, 0.3 * P, rtol=1e-10, atol=1e-12)

    def test_zero_displacement_zero_force(self, concave_quad, stvk):
        quad = triangulate_concave(concave_quad)
        r, _ = element_internal_concave(concave_quad, stvk, np.zeros(8), quad)
        assert np.allclose(r, 0.0)


class TestLoads:
    def test_cook_traction_resultant(self, cook_regular):
        f = traction_force(cook_regular, EdgeTraction('right', (0.0, 5.0)))
        assert f[1::2].sum() == pytest.approx(5.0 * 16.0)
        assert f[0::2].sum() == pytest.approx(0.0)

    def test_unknown_edge_set(self, cook_regular):
        with pytest.raises(UnknownSet):
            external_force(cook_regular, LoadCase(tractions=[EdgeTraction('rim', (1.0, 0.0))]))

    def test_affine_dirichlet_values(self, patch_mesh):
        spec = DirichletSpec('boundary', affine={'F': [[1.1, 0.0], [0.0, 1.0]], 'c': [0.5, 0.0]})
        values = LoadCase(dirichlet=[spec]).prescribed_values(patch_mesh)
        corner = int(patch_mesh.find_node([1.0, 1.0]))
        assert values[2 * corner] == pytest.approx(0.6)
        assert values[2 * corner + 1] == pytest.approx(0.0)

    def test_later_specs_override(self, cook_regular):
        case = LoadCase(dirichlet=[
            DirichletSpec('left', (0, 1), (1.0, 1.0)),
            DirichletSpec('bottom_left', (1,), (2.0, 2.0)),
        ])
        values = case.prescribed_values(cook_regular)
        node = int(cook_regular.node_set('bottom_left')[0])
        assert values[2 * node] == 1.0
        assert values[2 * node + 1] == 2.0

    def test_loadcase_dict_round_trip(self):
        case = LoadCase(body_force=(0.0, -1.0), tractions=[EdgeTraction('right', (0.0, 5.0))],
                        dirichlet=[DirichletSpec('left', (0,), (0.0, 0.0))])
        assert LoadCase.from_dict(case.to_dict()).to_dict() == case.to_dict()

    def test_body_force_integrates_domain_area(self, patch_mesh):
        disc = Discretization(patch_mesh)
        f = disc.body_force((0.0, 2.0))
        assert f[1::2].sum() == pytest.approx(2.0 * patch_mesh.domain_area, rel=1e-12)


class TestConstraintMatrix:
    def test_punch_block_center_shape(self, punch_block):
        C = constraint_matrix(punch_block)
        assert C.shape == (punch_block.n_dofs, 16)
        assert np.allclose(np.asarray(C.sum(axis=0)).ravel(), 0.0, atol=1e-13)

    def test_columns_per_direction(self, punch_block):
        C = constraint_matrix(punch_block).toarray()
        assert np.all(C[1::2, 0::2] == 0.0)
        assert np.all(C[0::2, 1::2] == 0.0)

    def test_affine_fields_are_continuous(self, punch_block, rng):
        C = constraint_matrix(punch_block)
        u = affine_nodal(punch_block.nodes, np.eye(2) + 0.1 * rng.standard_normal((2, 2)), rng.standard_normal(2))
        assert np.allclose(C.T @ u, 0.0, atol=1e-12)

    def test_untangled_mesh_has_no_constraints(self, cook_regular):
        assert constraint_matrix(cook_regular).shape == (cook_regular.n_dofs, 0)


class TestGlobalAssembly:
    def test_reduces_to_fem_without_tangling(self, stvk):
        mesh = gen_cooks(3)
        case = LoadCase(tractions=[EdgeTraction('right', (0.0, 5.0))], dirichlet=[DirichletSpec('left')])
        rng = np.random.default_rng(3)
        u = 0.01 * rng.standard_normal(mesh.n_dofs)
        state = State(u, np.zeros(0))
        itfem = assemble(mesh, None, stvk, case, state, 1.0, method='itfem')
        fem = assemble(mesh, None, stvk, case, state, 1.0, method='fem')
        diff = (itfem.Kt - fem.Kt).toarray()
        assert np.abs(diff).max() <= 1e-14 * np.abs(fem.Kt.toarray()).max()
        assert np.allclose(itfem.Ru, fem.Ru, rtol=1e-14, atol=0.0)
        assert itfem.n_lambda == 0

    def test_dof_partition(self, patch_mesh):
        case = LoadCase(dirichlet=[DirichletSpec('boundary')])
        dofs = DofMap(patch_mesh, case, 1)
        assert len(dofs.fixed) == 16
        assert dofs.free.tolist() == [8, 9]
        assert dofs.n_lambda == 2

    def test_translation_invariance(self, patch_mesh, neo_hookean, rng):
        assembler = SystemAssembler(patch_mesh, neo_hookean, LoadCase())
        u = 0.01 * rng.standard_normal(patch_mesh.n_dofs)
        system = assembler.assemble(State(u, np.zeros(assembler.n_lambda)), 1.0)
        Kt = system.Kt.toarray()
        for direction in range(2):
            t = np.zeros(patch_mesh.n_dofs)
            t[direction::2] = 1.0
            assert np.abs(Kt @ t).max() <= 1e-9 * np.abs(Kt).max()

    def test_global_tangent_matches_finite_differences(self, patch_mesh, stvk, rng):
        assembler = SystemAssembler(patch_mesh, stvk, LoadCase())
        u = 0.01 * rng.standard_normal(patch_mesh.n_dofs)
        Kt = assembler.assemble(State(u, np.zeros(assembler.n_lambda)), 1.0).Kt.toarray()

        def residual(v):
            r, _, _, _ = assembler.internal(v, tangent=False)
            return assembler.disc.scatter_vector(r)

        assert relative(Kt, fd_tangent(residual, u)) < 1e-5

    def test_fixed_pattern_matches_coo_sum(self, cook_tangled, rng):
        disc = Discretization(cook_tangled)
        k = rng.standard_normal((len(disc.order), 8, 8))
        rows = np.repeat(disc.edofs, 8, axis=1).ravel()
        cols = np.tile(disc.edofs, (1, 8)).ravel()
        expected = sp.coo_matrix((k.ravel(), (rows, cols)), shape=(cook_tangled.n_dofs,) * 2).toarray()
        assert np.allclose(disc.scatter_matrix(k).toarray(), expected)

    def test_lifting_terms(self, patch_mesh, neo_hookean):
        case = LoadCase(dirichlet=[DirichletSpec('boundary', affine={'F': [[1.1, 0.0], [0.0, 1.0]]})])
        assembler = SystemAssembler(patch_mesh, neo_hookean, case)
        system = assembler.assemble(assembler.initial_state(), 0.5)
        assert np.allclose(system.du_fixed, 0.5 * assembler.dofs.fixed_values)
        rhs_u, rhs_c = system.rhs()
        assert rhs_u.shape == (2,)
        assert rhs_c.shape == (2,)
        assert system.block_matrix().shape == (4, 4)

    def test_total_potential_at_rest(self, cook_regular, stvk):
        case = LoadCase(tractions=[EdgeTraction('right', (0.0, 5.0))], dirichlet=[DirichletSpec('left')])
        state = State.zero(cook_regular.n_dofs, 0)
        assert total_potential(cook_regular, stvk, case, state, 1.0) == 0.0

    def test_centroid_det_f_and_corner_jacobian(self, patch_mesh):
        disc = Discretization(patch_mesh)
        assert np.allclose(disc.centroid_det_f(np.zeros(patch_mesh.n_dofs)), 1.0)
        jac = disc.min_corner_jacobian()
        report = classify_mesh(patch_mesh)
        assert jac[report.concave[0]] < 0
        assert np.all(np.delete(jac, report.concave) > 0)

    def test_fem_mode_on_tangled_mesh(self, patch_mesh):
        disc = Discretization(patch_mesh, method='fem')
        assert disc.n_lambda == 0
        assert disc.concave.size == 0
        assert disc.gauss.size == 4
