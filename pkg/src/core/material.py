"""
Hyperelastic constitutive models for plane strain.

Deformation gradients are in-plane 2×2 tensors with an implicit unit
out-of-plane stretch. Every function accepts a single tensor (2, 2) or a
batch (..., 2, 2) and returns arrays of matching leading shape.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, asdict
from typing import Dict, Any, Optional, Tuple

import numpy as np

from utils.errors import InadmissibleModuli, NonPositiveJacobianState, ConfigError

I2 = np.eye(2)


def _det(f: np.ndarray) -> np.ndarray:
    return f[..., 0, 0] * f[..., 1, 1] - f[..., 0, 1] * f[..., 1, 0]


def _inv_t(f: np.ndarray, det: np.ndarray) -> np.ndarray:
    """F^-T for 2×2 tensors."""
    out = np.empty_like(f)
    out[..., 0, 0] = f[..., 1, 1]
    out[..., 0, 1] = -f[..., 1, 0]
    out[..., 1, 0] = -f[..., 0, 1]
    out[..., 1, 1] = f[..., 0, 0]
    return out / det[..., None, None]


class MaterialModel(ABC):
    """Strain-energy model Ψ(F) with stress P = ∂Ψ/∂F and tangent A = ∂P/∂F."""

    name: str = 'material'

    @abstractmethod
    def energy(self, F: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def pk1(self, F: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def tangent(self, F: np.ndarray) -> np.ndarray:
        ...

    def stress_and_tangent(self, F: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.pk1(F), self.tangent(F)

    @property
    @abstractmethod
    def constants(self) -> 'ElasticConstants':
        ...

    def to_dict(self) -> Dict[str, Any]:
        return {'model': self.name, **asdict(self)}


@dataclass(frozen=True)
class GeneralizedNeoHookean(MaterialModel):
    """Ψ = μ/2 (J^(-2/3) tr b − 3) + K/2 (J − 1)², with tr b = F:F + 1."""

    mu: float
    K: float
    name = 'neo_hookean'

    def __post_init__(self):
        if self.mu <= 0 or self.K <= 0:
            raise InadmissibleModuli(f"neo-Hookean requires mu > 0 and K > 0 (mu={self.mu}, K={self.K})")

    def _kinematics(self, F: np.ndarray):
        F = np.asarray(F, dtype=float)
        J = _det(F)
        if np.any(J <= 0.0):
            raise NonPositiveJacobianState(f"det F = {float(np.min(J)):.3e}")
        I1 = np.sum(F * F, axis=(-2, -1)) + 1.0
        return F, J, I1, J ** (-2.0 / 3.0)

    def energy(self, F):
        F, J, I1, Jm23 = self._kinematics(F)
        return 0.5 * self.mu * (Jm23 * I1 - 3.0) + 0.5 * self.K * (J - 1.0) ** 2

    def pk1(self, F):
        F, J, I1, Jm23 = self._kinematics(F)
        G = _inv_t(F, J)
        a = (self.mu * Jm23)[..., None, None]
        return a * (F - (I1 / 3.0)[..., None, None] * G) + (self.K * J * (J - 1.0))[..., None, None] * G

    def tangent(self, F):
        F, J, I1, Jm23 = self._kinematics(F)
        G = _inv_t(F, J)
        m = self.mu * Jm23
        d = I2
        dd = np.einsum('ik,jl->ijkl', d, d)
        FG = np.einsum('...ij,...kl->...ijkl', F, G)
        GF = np.einsum('...ij,...kl->...ijkl', G, F)
        GG = np.einsum('...ij,...kl->...ijkl', G, G)
        GGx = np.einsum('...il,...kj->...ijkl', G, G)
        e = lambda s: s[..., None, None, None, None]
        return (e(m) * (dd - (2.0 / 3.0) * (FG + GF))
                + e(m * I1 / 3.0) * ((2.0 / 3.0) * GG + GGx)
                + e(self.K * (2.0 * J * J - J)) * GG
                - e(self.K * (J * J - J)) * GGx)

    @property
    def constants(self) -> 'ElasticConstants':
        return elastic_constants(K=self.K, mu=self.mu)


@dataclass(frozen=True)
class StVenantKirchhoff(MaterialModel):
    """Ψ = λ/2 (tr E)² + μ E:E, E = (FᵀF − I)/2."""

    lam: float
    mu: float
    name = 'stvk'

    def __post_init__(self):
        if self.mu <= 0 or self.lam <= -2.0 * self.mu / 3.0:
            raise InadmissibleModuli(f"St. Venant-Kirchhoff requires mu > 0 and lambda > -2mu/3")

    def _strain(self, F):
        F = np.asarray(F, dtype=float)
        C = np.einsum('...ki,...kj->...ij', F, F)
        return F, 0.5 * (C - I2)

    def _pk2(self, E):
        trE = E[..., 0, 0] + E[..., 1, 1]
        return self.lam * trE[..., None, None] * I2 + 2.0 * self.mu * E

    def energy(self, F):
        _, E = self._strain(F)
        trE = E[..., 0, 0] + E[..., 1, 1]
        return 0.5 * self.lam * trE ** 2 + self.mu * np.sum(E * E, axis=(-2, -1))

    def pk1(self, F):
        F, E = self._strain(F)
        return F @ self._pk2(E)

    def tangent(self, F):
        F, E = self._strain(F)
        S = self._pk2(E)
        b = np.einsum('...ik,...jk->...ij', F, F)
        return (np.einsum('ik,...jl->...ijkl', I2, S)
                + self.lam * np.einsum('...ij,...kl->...ijkl', F, F)
                + self.mu * (np.einsum('...ik,jl->...ijkl', b, I2)
                             + np.einsum('...il,...kj->...ijkl', F, F)))

    @property
    def constants(self) -> 'ElasticConstants':
        return elastic_constants(lam=self.lam, mu=self.mu)


def energy(model: MaterialModel, F) -> np.ndarray:
    return model.energy(F)


def pk1(model: MaterialModel, F) -> np.ndarray:
    return model.pk1(F)


def tangent(model: MaterialModel, F) -> np.ndarray:
    return model.tangent(F)


def fbar(F_gauss, F_centroid) -> np.ndarray:
    """
    F̄ = (det Fc / det Fg)^(1/2) · Fg, so that det F̄ = det Fc.

    Raises:
        NonPositiveJacobianState: either determinant is not positive
    """
    Fg = np.asarray(F_gauss, dtype=float)
    Fc = np.asarray(F_centroid, dtype=float)
    Jg = _det(Fg)
    Jc = _det(Fc)
    if np.any(Jg <= 0.0) or np.any(Jc <= 0.0):
        raise NonPositiveJacobianState("F-bar needs positive determinants")
    return np.sqrt(Jc / Jg)[..., None, None] * Fg


def fbar_derivatives(Fg: np.ndarray, Fc: np.ndarray):
    """
    F̄ with its first and second derivatives with respect to z = (vec Fg, vec Fc).

    Returns:
        Fbar (..., 2, 2); D (..., 4, 8) = ∂vec F̄/∂z; alpha (...);
        gamma (..., 8) = ∂ln α/∂z; dgamma (..., 8, 8) = ∂gamma/∂z,
        with α = (det Fc / det Fg)^(1/2)
    """
    Jg = _det(Fg)
    Jc = _det(Fc)
    if np.any(Jg <= 0.0) or np.any(Jc <= 0.0):
        raise NonPositiveJacobianState("F-bar needs positive determinants")
    Gg = _inv_t(Fg, Jg)
    Gc = _inv_t(Fc, Jc)
    alpha = np.sqrt(Jc / Jg)
    lead = Fg.shape[:-2]

    gamma = np.concatenate([-0.5 * Gg.reshape(lead + (4,)), 0.5 * Gc.reshape(lead + (4,))], axis=-1)
    fbar_t = alpha[..., None, None] * Fg
    vec_fg = Fg.reshape(lead + (4,))

    D = np.zeros(lead + (4, 8))
    D[..., :, :] = alpha[..., None, None] * vec_fg[..., :, None] * gamma[..., None, :]
    D[..., :, :4] += alpha[..., None, None] * np.eye(4)

    dgamma = np.zeros(lead + (8, 8))
    # ∂G_mN/∂F_pQ = -G_mQ G_pN
    dgamma[..., :4, :4] = 0.5 * np.einsum('...mq,...pn->...mnpq', Gg, Gg).reshape(lead + (4, 4))
    dgamma[..., 4:, 4:] = -0.5 * np.einsum('...mq,...pn->...mnpq', Gc, Gc).reshape(lead + (4, 4))
    return fbar_t, D, alpha, gamma, dgamma


@dataclass(frozen=True)
class ElasticConstants:
    """Isotropic constants with 3-D definitions (K = λ + 2μ/3)."""

    E: float
    nu: float
    lam: float
    mu: float
    K: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def elastic_constants(E: Optional[float] = None, nu: Optional[float] = None,
                      K: Optional[float] = None, mu: Optional[float] = None,
                      lam: Optional[float] = None) -> ElasticConstants:
    """
    Complete the isotropic constants from (E, ν), (K, μ) or (λ, μ).

    Raises:
        InadmissibleModuli: ν >= 0.5, ν <= -1 or μ <= 0
        ConfigError: an unsupported combination of inputs
    """
    if E is not None and nu is not None:
        if nu >= 0.5 or nu <= -1.0 or E <= 0:
            raise InadmissibleModuli(f"Inadmissible E={E}, nu={nu}")
        mu = E / (2.0 * (1.0 + nu))
        lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        K = lam + 2.0 * mu / 3.0
    elif K is not None and mu is not None:
        if mu <= 0 or K <= 0:
            raise InadmissibleModuli(f"Inadmissible K={K}, mu={mu}")
        lam = K - 2.0 * mu / 3.0
        nu = (3.0 * K - 2.0 * mu) / (2.0 * (3.0 * K + mu))
        E = 9.0 * K * mu / (3.0 * K + mu)
    elif lam is not None and mu is not None:
        if mu <= 0 or lam <= -2.0 * mu / 3.0:
            raise InadmissibleModuli(f"Inadmissible lambda={lam}, mu={mu}")
        K = lam + 2.0 * mu / 3.0
        nu = lam / (2.0 * (lam + mu))
        E = mu * (3.0 * lam + 2.0 * mu) / (lam + mu)
    else:
        raise ConfigError("elastic_constants needs (E, nu), (K, mu) or (lam, mu)")
    if mu <= 0 or nu >= 0.5:
        raise InadmissibleModuli(f"Inadmissible moduli: mu={mu}, nu={nu}")
    return ElasticConstants(E=E, nu=nu, lam=lam, mu=mu, K=K)


MODELS = {
    'neo_hookean': GeneralizedNeoHookean,
    'stvk': StVenantKirchhoff,
}


def build_material(spec: Dict[str, Any]) -> MaterialModel:
    """
    Build a material from a config mapping.

    Accepts {'model': 'neo_hookean' | 'stvk'} plus any constant pair understood by
    `elastic_constants` (E/nu, K/mu, lam/mu), or `nu` alone with `mu` (K derived).
    """
    model = spec.get('model', 'stvk')
    if model not in MODELS:
        raise ConfigError(f"Unknown material model '{model}'; expected one of {sorted(MODELS)}")
    keys = {k: float(spec[k]) for k in ('E', 'nu', 'K', 'mu', 'lam') if spec.get(k) is not None}
    if 'nu' in keys and 'mu' in keys and 'E' not in keys:
        nu, mu = keys['nu'], keys['mu']
        consts = elastic_constants(E=2.0 * mu * (1.0 + nu), nu=nu)
    elif 'E' in keys and 'nu' in keys:
        consts = elastic_constants(E=keys['E'], nu=keys['nu'])
    elif 'K' in keys and 'mu' in keys:
        consts = elastic_constants(K=keys['K'], mu=keys['mu'])
    elif 'lam' in keys and 'mu' in keys:
        consts = elastic_constants(lam=keys['lam'], mu=keys['mu'])
    else:
        raise ConfigError(f"Material '{model}' needs E/nu, K/mu, lam/mu or nu/mu, got {sorted(keys)}")
    if model == 'neo_hookean':
        return GeneralizedNeoHookean(mu=consts.mu, K=consts.K)
    return StVenantKirchhoff(lam=consts.lam, mu=consts.mu)
