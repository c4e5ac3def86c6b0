"""
Total-Lagrangian element kernels.

Elements are integrated in batches: a batch holds, for E elements and Q
quadrature points each, the physical shape gradients G (E, Q, 4, 2), the
quadrature weights w (E, Q) in reference area units and, when F-bar is on, the
centroid gradients Gc (E, 4, 2). Convex elements use the 2×2 Gauss rule with
w = det J; concave elements use their TriQuadrature with physical weights.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.material import MaterialModel, fbar_derivatives
from core.param import (
    GAUSS_2X2_POINTS, GAUSS_2X2_WEIGHTS, TriQuadrature, grad_shape_q4, physical_gradients,
    polygon_centroid, positive_preimage, shape_q4,
)
from utils.errors import NonPositiveJacobianState, PreimageNotFound

I2 = np.eye(2)


@dataclass
class ElementBatch:
    """Quadrature data for a group of elements sharing a rule size."""

    elem_ids: np.ndarray    # (E,) global element indices
    N: np.ndarray           # (E, Q, 4) shape values
    G: np.ndarray           # (E, Q, 4, 2) physical gradients
    w: np.ndarray           # (E, Q)
    Gc: np.ndarray          # (E, 4, 2) centroid gradients for F-bar

    @property
    def size(self) -> int:
        return len(self.elem_ids)

    def subset(self, idx: np.ndarray) -> 'ElementBatch':
        return ElementBatch(self.elem_ids[idx], self.N[idx], self.G[idx], self.w[idx], self.Gc[idx])


def empty_batch() -> ElementBatch:
    return ElementBatch(np.zeros(0, dtype=np.int64), np.zeros((0, 4, 4)), np.zeros((0, 4, 4, 2)),
                        np.zeros((0, 4)), np.zeros((0, 4, 2)))


def gauss_batch(coords: np.ndarray, elem_ids: np.ndarray) -> ElementBatch:
    """2×2 Gauss data for elements with corner coordinates (E, 4, 2)."""
    coords = np.asarray(coords, dtype=float).reshape(-1, 4, 2)
    dn = grad_shape_q4(GAUSS_2X2_POINTS)                       # (Q, 4, 2)
    jac = np.einsum('eai,qaj->eqij', coords, dn)
    det = np.linalg.det(jac)
    inv = np.linalg.inv(jac)
    G = np.einsum('qaj,eqji->eqai', dn, inv)
    w = det * GAUSS_2X2_WEIGHTS[None, :]
    N = np.broadcast_to(shape_q4(GAUSS_2X2_POINTS), (len(coords), 4, 4)).copy()

    dn0 = grad_shape_q4(np.zeros(2))                           # (4, 2)
    jac0 = np.einsum('eai,aj->eij', coords, dn0)
    Gc = np.einsum('aj,eji->eai', dn0, np.linalg.inv(jac0))
    return ElementBatch(np.asarray(elem_ids, dtype=np.int64), N, G, w, Gc)


def concave_batch(coords: np.ndarray, quads, elem_ids: np.ndarray) -> ElementBatch:
    """
    Batch of concave elements integrated over their TriQuadrature.

    The F-bar centroid is sampled at the positive-branch preimage of the polygon
    centroid, falling back to the quadrature point nearest to it.
    """
    coords = np.asarray(coords, dtype=float).reshape(-1, 4, 2)
    N = np.stack([shape_q4(q.xi) for q in quads])
    G = np.stack([q.grads for q in quads])
    w = np.stack([q.weights for q in quads])
    Gc = []
    for xy, q in zip(coords, quads):
        centroid = polygon_centroid(xy)
        try:
            xi_c = np.array(positive_preimage(xy, centroid))
        except PreimageNotFound:
            xi_c = q.xi[int(np.argmin(np.linalg.norm(q.points - centroid, axis=1)))]
        gc, _ = physical_gradients(xy, xi_c)
        Gc.append(gc)
    Gc = np.array(Gc).reshape(-1, 4, 2)
    return ElementBatch(np.asarray(elem_ids, dtype=np.int64), N, G, w, Gc)


def _b_matrix(G: np.ndarray) -> np.ndarray:
    """B[..., 2i+J, 2a+k] = δ_ik G[..., a, J], so that vec(F - I) = B·u_e."""
    lead = G.shape[:-2]
    B = np.zeros(lead + (2, 2, 4, 2))
    Gt = np.swapaxes(G, -1, -2)
    for i in range(2):
        B[..., i, :, :, i] = Gt
    return B.reshape(lead + (4, 8))


def deformation_gradients(u_e: np.ndarray, G: np.ndarray) -> np.ndarray:
    """F = I + Σ_a u_a ⊗ ∇N_a, u_e (E, 4, 2), G (E, Q, 4, 2) -> (E, Q, 2, 2)."""
    return I2 + np.einsum('eai,eqaj->eqij', u_e, G)


@dataclass
class BatchResult:
    """Element vectors, matrices and diagnostics for one batch."""

    r: np.ndarray                 # (E, 8)
    k: Optional[np.ndarray]       # (E, 8, 8)
    energy: np.ndarray            # (E,)
    min_det_f: float


def _locate_bad(det: np.ndarray, elem_ids: np.ndarray) -> int:
    bad = np.argwhere(det.reshape(len(elem_ids), -1) <= 0.0)
    return int(elem_ids[bad[0, 0]]) if len(bad) else -1


def integrate_batch(material: MaterialModel, u_e: np.ndarray, batch: ElementBatch,
                    use_fbar: bool = False, tangent: bool = True) -> BatchResult:
    """
    Internal force, consistent tangent and strain energy of a batch.

    With F-bar the element energy is Σ w Ψ(F̄); the residual is its gradient and
    the tangent its Hessian, including the centroid coupling term.

    Raises:
        NonPositiveJacobianState: carries the first offending element id
    """
    E = batch.size
    if E == 0:
        return BatchResult(np.zeros((0, 8)), np.zeros((0, 8, 8)) if tangent else None, np.zeros(0), np.inf)

    u_e = np.asarray(u_e, dtype=float).reshape(E, 4, 2)
    Fg = deformation_gradients(u_e, batch.G)
    Bg = _b_matrix(batch.G)
    Q = batch.G.shape[1]

    try:
        if not use_fbar:
            F_eval = Fg
            P = material.pk1(Fg)
            g = P.reshape(E, Q, 4)
            B = Bg
            H = material.tangent(Fg).reshape(E, Q, 4, 4) if tangent else None
        else:
            Fc = I2 + np.einsum('eai,eaj->eij', u_e, batch.Gc)
            Fc_q = np.broadcast_to(Fc[:, None], Fg.shape)
            Fbar, D, alpha, gamma, dgamma = fbar_derivatives(Fg, Fc_q)
            F_eval = Fbar
            P = material.pk1(Fbar)
            vecP = P.reshape(E, Q, 4)
            g = np.einsum('eqi,eqiz->eqz', vecP, D)
            Bc = np.broadcast_to(_b_matrix(batch.Gc)[:, None], (E, Q, 4, 8))
            B = np.concatenate([Bg, Bc], axis=2)
            H = None
            if tangent:
                A = material.tangent(Fbar).reshape(E, Q, 4, 4)
                p_fg = np.sum(P * Fg, axis=(-2, -1))
                pg = np.concatenate([vecP, np.zeros_like(vecP)], axis=-1)
                H = (np.einsum('eqiz,eqij,eqjy->eqzy', D, A, D)
                     + (alpha * p_fg)[..., None, None]
                     * (np.einsum('eqz,eqy->eqzy', gamma, gamma) + dgamma)
                     + alpha[..., None, None]
                     * (np.einsum('eqz,eqy->eqzy', gamma, pg) + np.einsum('eqz,eqy->eqzy', pg, gamma)))
        psi = material.energy(F_eval)
    except NonPositiveJacobianState as e:
        det = np.linalg.det(Fg)
        if use_fbar:
            det = np.minimum(det, np.linalg.det(I2 + np.einsum('eai,eaj->eij', u_e, batch.Gc))[:, None])
        raise NonPositiveJacobianState(str(e), element=_locate_bad(det, batch.elem_ids))

    r = np.einsum('eq,eqzd,eqz->ed', batch.w, B, g)
    k = np.einsum('eq,eqzd,eqzy,eqyc->edc', batch.w, B, H, B) if tangent else None
    energy = np.einsum('eq,eq->e', batch.w, psi)
    min_det = float(np.min(np.linalg.det(F_eval)))
    return BatchResult(r, k, energy, min_det)


def element_internal_convex(coords: np.ndarray, material: MaterialModel, u_e: np.ndarray,
                            fbar: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Internal force (8,) and tangent (8, 8) of one convex element, 2×2 Gauss."""
    batch = gauss_batch(np.asarray(coords)[None], np.array([0]))
    res = integrate_batch(material, np.asarray(u_e).reshape(1, 4, 2), batch, fbar)
    return res.r[0], res.k[0]


def element_internal_concave(coords: np.ndarray, material: MaterialModel, u_e: np.ndarray,
                             triquad: TriQuadrature, fbar: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Internal force (8,) and tangent (8, 8) of one concave element over its TriQuadrature."""
    batch = concave_batch(np.asarray(coords)[None], [triquad], np.array([0]))
    res = integrate_batch(material, np.asarray(u_e).reshape(1, 4, 2), batch, fbar)
    return res.r[0], res.k[0]
