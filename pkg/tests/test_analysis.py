"""
Tests for reference fields, H1 errors, probes, studies and sweeps.
"""

import numpy as np
import pytest
import yaml

from analysis.convergence import convergence_study, method_settings, reference_solution, study_row
from analysis.norms import fit_slope, h1_seminorm_difference, h1_seminorm_error, probe, quadrature_sample
from analysis.reference import BucketLocator, ReferenceField
from analysis.sweeps import SINGLE_D_VALUES, SWEEP_COLUMNS, poisson_sweep, single_concave_sweep
from assembly.loads import DirichletSpec, EdgeTraction, LoadCase
from core.param import detj_coeffs, forward_map
from mesh.generators import gen_cooks
from problems.presets import cooks_problem, punch_problem, thin_beam_problem
from solver.newton import NewtonSolver, SolverConfig
from utils.errors import ConfigError, PointNotLocated

from conftest import REPO_ROOT

GRADIENT = np.array([[0.02, -0.01], [0.005, 0.03]])
SHIFT = np.array([0.1, -0.2])

# center node of the patch is at (0.875, 0.875) under the default affine map
PATCH_CENTER_UX = 0.1 * 0.875 + 0.05 * 0.875 + 0.01


def affine_field(mesh):
    return (mesh.nodes @ GRADIENT.T + SHIFT).ravel()


class TestLocator:
    def test_every_centroid_is_found(self, cook_regular):
        locator = BucketLocator(cook_regular)
        centroids = cook_regular.all_element_coords().mean(axis=1)
        for e, c in enumerate(centroids):
            found, xi = locator.locate(c)
            assert found == e
            assert np.all(np.abs(xi) <= 1.0 + 1e-12)

    def test_outside_point(self, cook_regular):
        with pytest.raises(PointNotLocated):
            BucketLocator(cook_regular).locate([-10.0, -10.0])

    def test_concave_element_located_on_positive_branch(self, patch_mesh):
        locator = BucketLocator(patch_mesh)
        e, xi = locator.locate([0.5, 0.5])
        coords = patch_mesh.element_coords(e)
        assert detj_coeffs(coords)(xi) > 0
        assert np.allclose(forward_map(coords, xi), [0.5, 0.5], atol=1e-10)


class TestReferenceField:
    def test_reproduces_affine_values_and_gradients(self, cook_regular, rng):
        field = ReferenceField(cook_regular, affine_field(cook_regular))
        centroids = cook_regular.all_element_coords().mean(axis=1)
        for p in centroids[rng.choice(len(centroids), 5, replace=False)]:
            assert np.allclose(field.value(p), GRADIENT @ p + SHIFT, atol=1e-12)
            assert np.allclose(field.gradient(p), GRADIENT, atol=1e-12)

    def test_length_mismatch(self, cook_regular):
        with pytest.raises(ValueError):
            ReferenceField(cook_regular, np.zeros(3))


class TestNorms:
    def test_quadrature_weights_cover_domain(self, cook_tangled):
        _, weights, _ = quadrature_sample(cook_tangled, np.zeros(cook_tangled.n_dofs))
        assert weights.sum() == pytest.approx(1440.0, rel=1e-10)

    def test_identical_fields_have_zero_difference(self, cook_tangled, rng):
        u = rng.standard_normal(cook_tangled.n_dofs)
        assert h1_seminorm_difference(cook_tangled, u, u) == 0.0

    def test_affine_error_vanishes_across_meshes(self, cook_regular, cook_tangled):
        reference = ReferenceField(cook_regular, affine_field(cook_regular))
        assert h1_seminorm_error(cook_tangled, affine_field(cook_tangled), reference) < 1e-9

    def test_constant_gradient_error(self, cook_regular):
        reference = ReferenceField(cook_regular, np.zeros(cook_regular.n_dofs))
        error = h1_seminorm_error(cook_regular, affine_field(cook_regular), reference)
        assert error == pytest.approx(np.linalg.norm(GRADIENT) * np.sqrt(1440.0), rel=1e-10)


class TestProbe:
    def test_by_set_index_and_point(self, cook_regular):
        u = affine_field(cook_regular)
        node = int(cook_regular.node_set('top_right')[0])
        X = cook_regular.nodes[node]
        expected = GRADIENT @ X + SHIFT
        assert np.allclose(probe(u, 'top_right', cook_regular), expected)
        assert np.allclose(probe(u, node, cook_regular), expected)
        assert np.allclose(probe(u, X.tolist(), cook_regular), expected)

    def test_interpolated_point(self, cook_regular):
        p = cook_regular.all_element_coords()[3].mean(axis=0)
        assert np.allclose(probe(affine_field(cook_regular), p, cook_regular), GRADIENT @ p + SHIFT)

    def test_run_result_steps(self, stvk):
        mesh = gen_cooks(1)
        case = LoadCase(tractions=[EdgeTraction('right', (0.0, 0.05))], dirichlet=[DirichletSpec('left')])
        run = NewtonSolver(mesh, stvk, case, SolverConfig(load_steps=2)).run()
        first = probe(run, 'top_right', mesh, step=0)
        last = probe(run, 'top_right', mesh)
        assert 0 < first[1] < last[1]

    def test_point_outside(self, cook_regular):
        with pytest.raises(PointNotLocated):
            probe(np.zeros(cook_regular.n_dofs), [100.0, 100.0], cook_regular)


class TestFitSlope:
    def test_power_law(self):
        h = np.array([1.0, 0.5, 0.25, 0.125])
        slope, residual = fit_slope(h, 3.0 * h ** 2)
        assert slope == pytest.approx(2.0)
        assert residual == pytest.approx(0.0, abs=1e-12)

    def test_skips_failed_rows(self):
        slope, _ = fit_slope([1.0, 0.5, 0.25], [2.0, float('nan'), 0.5])
        assert slope == pytest.approx(1.0)

    def test_too_few_points(self):
        slope, residual = fit_slope([1.0], [1.0])
        assert np.isnan(slope) and np.isnan(residual)


class TestStudies:
    def test_method_settings(self):
        assert method_settings('fem_regular', 'checkerboard') == ('none', 'fem')
        assert method_settings('itfem_tangled', 'checkerboard') == ('checkerboard', 'itfem')
        with pytest.raises(ConfigError):
            method_settings('xfem', 'checkerboard')

    def test_patch_study_rows(self):
        table = convergence_study('patch', 'itfem_tangled', [1, 0], SolverConfig(load_steps=1),
                                  tangle='block_center', workers=1)
        assert [r.n for r in table.rows] == [0, 1]
        for row in table.rows:
            assert not row.failed
            assert row.probe == pytest.approx(PATCH_CENTER_UX, abs=1e-9)
            assert np.isnan(row.h1_error)
        assert np.isnan(table.slope)

    def test_condition_column(self):
        table = convergence_study('patch', 'itfem_tangled', [0], SolverConfig(load_steps=1),
                                  tangle='block_center', condition=True, workers=1)
        assert table.rows[0].condition >= 1.0

    def test_failed_row_keeps_nan(self):
        row = study_row('patch', 0, 'itfem_tangled', 'block_center', SolverConfig(load_steps=1, max_newton=1))
        assert row.failed
        assert 'max_newton' in row.message
        assert np.isnan(row.probe)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            convergence_study('bridge', 'itfem_tangled', [1])

    def test_poisson_sweep_columns(self):
        rows = poisson_sweep('patch', 0, [0.3, 0.49], tangle='block_center', config=SolverConfig(load_steps=1))
        assert len(rows) == 2
        assert set(rows[0]) == set(SWEEP_COLUMNS['poisson'])
        assert rows[1]['itfem_tangled'] == pytest.approx(PATCH_CENTER_UX, abs=1e-9)

    def test_poisson_sweep_marks_diverged_points(self):
        rows = poisson_sweep('patch', 0, [0.3], tangle='block_center',
                             config=SolverConfig(load_steps=1, max_newton=1))
        assert rows[0]['itfem_tangled_diverged'] is True
        assert rows[0]['fem_regular_diverged'] is True
        assert np.isnan(rows[0]['itfem_tangled'])
        assert np.isnan(rows[0]['itfem_gap'])

    def test_single_sweep_columns(self):
        rows = single_concave_sweep(1, [0.3], reference_n=2, config=SolverConfig(load_steps=2))
        assert set(rows[0]) == set(SWEEP_COLUMNS['single'])
        row = rows[0]
        assert row['itfem_diverged'] is False
        assert np.isfinite(row['itfem_excess'])
        assert row['itfem_excess'] == pytest.approx(
            abs(row['itfem_tip'] - row['regular_tip']) / abs(row['reference_tip']))


@pytest.mark.slow
class TestBenchmarks:
    def test_cook_itfem_rate(self):
        table = convergence_study('cooks', 'itfem_tangled', [1, 2, 3], SolverConfig(), reference_n=5)
        assert len(table.successful) == 3
        assert table.slope >= 0.9

    def test_cook_reduces_to_fem_without_tangling(self):
        problem = cooks_problem(3, 'none')
        a = NewtonSolver(problem.mesh, problem.material, problem.loadcase, SolverConfig(method='itfem')).run()
        b = NewtonSolver(problem.mesh, problem.material, problem.loadcase, SolverConfig(method='fem')).run()
        assert np.allclose(a.u, b.u, rtol=1e-10, atol=1e-12 * np.abs(b.u).max())

    def test_punch_iterations(self):
        problem = punch_problem(2, 'block_center')
        run = NewtonSolver(problem.mesh, problem.material, problem.loadcase, SolverConfig()).run()
        assert all(s.newton_iters <= 8 for s in run.steps)
        assert run.min_det_f > 0

    def test_cook_single_concave_sweep(self):
        rows = single_concave_sweep(3, SINGLE_D_VALUES, reference_n=6, config=SolverConfig())
        assert not any(r['itfem_diverged'] for r in rows)
        excess = [r['itfem_excess'] for r in rows]
        errors = [r['itfem_error'] for r in rows]
        for earlier, later in zip(excess, excess[1:]):
            assert later <= 1.1 * earlier
        for earlier, later in zip(errors, errors[1:]):
            assert later <= 1.1 * earlier
        deepest = rows[-1]
        assert deepest['d'] == pytest.approx(0.3)
        assert deepest['fem_diverged'] or deepest['fem_excess'] >= 5.0 * deepest['itfem_excess']

    def test_cook_checkerboard_convergence(self):
        _, _, reference = reference_solution('cooks', 6, SolverConfig())
        tables = {
            method: convergence_study('cooks', method, [2, 3, 4, 5], SolverConfig(), reference=reference)
            for method in ('fem_regular', 'fem_tangled', 'itfem_tangled')
        }
        regular, itfem = tables['fem_regular'], tables['itfem_tangled']
        assert len(itfem.successful) == 4
        assert itfem.slope >= 0.9
        assert abs(itfem.slope - regular.slope) < 0.2
        regular_a = regular.rows[-1].probe
        assert abs(itfem.rows[-1].probe - regular_a) / abs(regular_a) < 0.01
        fem_last = tables['fem_tangled'].rows[-1]
        assert fem_last.failed or abs(fem_last.probe - regular_a) / abs(regular_a) > 0.02

    @pytest.mark.parametrize('tangle', ['pairwise', 'block_center'])
    def test_punch_tangled_families(self, tangle):
        _, _, reference = reference_solution('punch', 6, SolverConfig())
        itfem = convergence_study('punch', 'itfem_tangled', [2, 3, 4, 5], SolverConfig(), tangle=tangle,
                                  reference=reference)
        regular = study_row('punch', 5, 'fem_regular', 'none', SolverConfig())
        assert len(itfem.successful) == 4
        assert itfem.slope >= 0.9
        assert abs(itfem.rows[-1].probe - regular.probe) / abs(regular.probe) < 0.01

        problem = punch_problem(2, tangle)
        run = NewtonSolver(problem.mesh, problem.material, problem.loadcase, SolverConfig()).run()
        assert all(s.newton_iters <= 8 for s in run.steps)

    def test_near_incompressible_block_center(self):
        preset = yaml.safe_load((REPO_ROOT / 'config' / 'presets' / 'punch_fbar.yaml').read_text())
        config = SolverConfig.from_dict(preset['solver'])
        assert config.fbar and config.step_cut and config.load_steps == 20
        material = preset['material']
        runs = {}
        for tangle, method in (('none', 'fem'), ('block_center', 'itfem')):
            problem = punch_problem(4, tangle, material)
            runs[tangle] = NewtonSolver(problem.mesh, problem.material, problem.loadcase,
                                        SolverConfig.from_dict({**config.to_dict(), 'method': method}),
                                        probes=problem.probes).run()
        regular, tangled = runs['none'], runs['block_center']
        assert regular.converged and tangled.converged
        assert len(tangled.steps) == 20
        a = regular.probes['top_left_uy'][-1]
        b = tangled.probes['top_left_uy'][-1]
        assert abs(b - a) / abs(a) < 0.02
        assert 0.98 <= tangled.final.min_det_f <= 1.02

    def test_poisson_sweep_gap_stays_bounded(self):
        preset = yaml.safe_load((REPO_ROOT / 'config' / 'presets' / 'punch_fbar.yaml').read_text())
        config = SolverConfig.from_dict(preset['solver'])
        rows = poisson_sweep('punch', 2, [0.49, 0.495, 0.4995], tangle='block_center', config=config)
        assert not any(r['itfem_tangled_diverged'] or r['fem_regular_diverged'] for r in rows)
        gaps = [r['itfem_gap'] for r in rows]
        assert all(np.isfinite(gaps))
        floor = 1e-4 * abs(rows[0]['fem_regular'])
        assert max(gaps) <= 2.0 * gaps[0] + floor

    def test_thin_beam_split_pair_limit(self):
        tips = {}
        for tangle, method in (('none', 'fem'), ('split_pair', 'itfem')):
            problem = thin_beam_problem(3, tangle)
            run = NewtonSolver(problem.mesh, problem.material, problem.loadcase, SolverConfig(method=method),
                               probes=problem.probes).run()
            tips[tangle] = run.probes['tip_uy'][-1]
        assert abs(tips['split_pair'] - tips['none']) / abs(tips['none']) < 0.01
        assert abs(tips['none']) > 0.1 * 100.0

    def test_condition_number_growth_matches_regular(self):
        slopes = {}
        for method in ('fem_regular', 'itfem_tangled'):
            table = convergence_study('cooks', method, [2, 3, 4], SolverConfig(), condition=True, workers=1)
            assert len(table.successful) == 3
            slopes[method] = table.condition_slope
        assert abs(slopes['itfem_tangled'] - slopes['fem_regular']) <= 0.5
