"""
Tests for the hyperelastic models and the F-bar kinematics.
"""

import numpy as np
import pytest

from core.material import (
    GeneralizedNeoHookean, StVenantKirchhoff, build_material, elastic_constants, fbar,
    fbar_derivatives,
)
from utils.errors import ConfigError, InadmissibleModuli, NonPositiveJacobianState

from conftest import random_deformation

FD_STEP = 1e-6


def fd_stress(model, F):
    P = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            dF = np.zeros((2, 2))
            dF[i, j] = FD_STEP
            P[i, j] = (model.energy(F + dF) - model.energy(F - dF)) / (2 * FD_STEP)
    return P


def fd_tangent(model, F):
    A = np.zeros((2, 2, 2, 2))
    for k in range(2):
        for l in range(2):
            dF = np.zeros((2, 2))
            dF[k, l] = FD_STEP
            A[:, :, k, l] = (model.pk1(F + dF) - model.pk1(F - dF)) / (2 * FD_STEP)
    return A


def relative(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.fixture(params=['neo_hookean', 'stvk'])
def model(request, neo_hookean, stvk):
    return neo_hookean if request.param == 'neo_hookean' else stvk


def test_neo_hookean_energy_oracle(neo_hookean):
    F = np.diag([1.1, 1.0])
    expected = 250.0 * (1.1 ** (-2.0 / 3.0) * 3.21 - 3.0) + 850.0 * 0.01
    assert neo_hookean.energy(F) == pytest.approx(expected, rel=1e-14)


def test_stress_free_reference(model):
    assert np.array_equal(model.pk1(np.eye(2)), np.zeros((2, 2)))
    assert model.energy(np.eye(2)) == pytest.approx(0.0, abs=1e-12)


def test_stress_matches_energy_derivative(model, rng):
    for _ in range(20):
        F = random_deformation(rng)
        assert relative(fd_stress(model, F), model.pk1(F)) <= 1e-6


def test_tangent_matches_stress_derivative(model, rng):
    for _ in range(20):
        F = random_deformation(rng)
        assert relative(fd_tangent(model, F), model.tangent(F)) <= 1e-5


def test_tangent_major_symmetry(model, rng):
    A = model.tangent(random_deformation(rng))
    assert np.allclose(A, np.transpose(A, (2, 3, 0, 1)))


def test_batched_evaluation(model, rng):
    Fs = np.array([random_deformation(rng) for _ in range(6)]).reshape(2, 3, 2, 2)
    P = model.pk1(Fs)
    assert P.shape == (2, 3, 2, 2)
    assert np.allclose(P[1, 2], model.pk1(Fs[1, 2]))
    assert model.tangent(Fs).shape == (2, 3, 2, 2, 2, 2)


def test_neo_hookean_small_strain_moduli(neo_hookean):
    A = neo_hookean.tangent(np.eye(2))
    assert A[0, 1, 0, 1] == pytest.approx(500.0)
    assert A[0, 0, 0, 0] == pytest.approx(4.0 / 3.0 * 500.0 + 1700.0)


def test_stvk_small_strain_moduli(stvk):
    A = stvk.tangent(np.eye(2))
    assert A[0, 0, 0, 0] == pytest.approx(100.0 + 2 * 50.0)
    assert A[0, 0, 1, 1] == pytest.approx(100.0)


def test_neo_hookean_rejects_inverted_state(neo_hookean):
    with pytest.raises(NonPositiveJacobianState):
        neo_hookean.pk1(np.diag([1.0, -0.5]))


def test_inadmissible_moduli():
    with pytest.raises(InadmissibleModuli):
        GeneralizedNeoHookean(mu=-1.0, K=10.0)
    with pytest.raises(InadmissibleModuli):
        StVenantKirchhoff(lam=-100.0, mu=1.0)
    with pytest.raises(InadmissibleModuli):
        elastic_constants(E=1.0, nu=0.5)


class TestElasticConstants:
    def test_from_young_and_poisson(self):
        c = elastic_constants(E=20.0, nu=0.3)
        assert c.mu == pytest.approx(20.0 / 2.6)
        assert c.lam == pytest.approx(20.0 * 0.3 / (1.3 * 0.4))
        assert c.K == pytest.approx(c.lam + 2.0 * c.mu / 3.0)

    def test_pairs_agree(self):
        a = elastic_constants(K=1700.0, mu=500.0)
        b = elastic_constants(lam=a.lam, mu=a.mu)
        c = elastic_constants(E=a.E, nu=a.nu)
        assert b.K == pytest.approx(1700.0)
        assert c.mu == pytest.approx(500.0)

    def test_missing_pair(self):
        with pytest.raises(ConfigError):
            elastic_constants(E=1.0)


class TestBuildMaterial:
    def test_nearly_incompressible_from_poisson(self):
        model = build_material({'model': 'neo_hookean', 'mu': 500.0, 'nu': 0.49995})
        assert isinstance(model, GeneralizedNeoHookean)
        assert model.mu == pytest.approx(500.0)
        assert model.K == pytest.approx(5.0e6, rel=1e-3)

    def test_stvk_from_lame(self):
        model = build_material({'model': 'stvk', 'lam': 100.0, 'mu': 50.0})
        assert model.to_dict() == {'model': 'stvk', 'lam': 100.0, 'mu': 50.0}

    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            build_material({'model': 'mooney', 'E': 1.0, 'nu': 0.3})

    def test_incomplete_constants(self):
        with pytest.raises(ConfigError):
            build_material({'model': 'stvk', 'E': 1.0})


class TestFbar:
    def test_determinant_from_centroid(self, rng):
        Fg = random_deformation(rng)
        Fc = random_deformation(rng)
        assert np.linalg.det(fbar(Fg, Fc)) == pytest.approx(np.linalg.det(Fc))

    def test_identity_when_equal(self, rng):
        F = random_deformation(rng)
        assert np.allclose(fbar(F, F), F)

    def test_rejects_inverted(self):
        with pytest.raises(NonPositiveJacobianState):
            fbar(np.eye(2), np.diag([1.0, -1.0]))

    def test_derivatives_match_finite_differences(self, rng):
        Fg = random_deformation(rng)
        Fc = random_deformation(rng)
        Fbar, D, alpha, gamma, dgamma = fbar_derivatives(Fg, Fc)
        assert np.allclose(Fbar, fbar(Fg, Fc))

        z = np.concatenate([Fg.ravel(), Fc.ravel()])

        def evaluate(zz):
            fb, _, a, g, _ = fbar_derivatives(zz[:4].reshape(2, 2), zz[4:].reshape(2, 2))
            return fb.ravel(), np.log(a), g

        h = 1e-7
        for k in range(8):
            dz = np.zeros(8)
            dz[k] = h
            fp, lp, gp = evaluate(z + dz)
            fm, lm, gm = evaluate(z - dz)
            assert np.allclose(D[:, k], (fp - fm) / (2 * h), atol=1e-6)
            assert gamma[k] == pytest.approx((lp - lm) / (2 * h), abs=1e-6)
            assert np.allclose(dgamma[:, k], (gp - gm) / (2 * h), atol=1e-5)
