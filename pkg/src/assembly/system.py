"""
Global i-TFEM system: dof map, discretization cache, constraint matrix and
the assembled saddle blocks.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from assembly.elements import (
    BatchResult, ElementBatch, concave_batch, empty_batch, gauss_batch, integrate_batch,
)
from assembly.loads import LoadCase, traction_force
from core.material import MaterialModel
from core.param import constraint_row, triangulate_concave
from mesh.classify import TangleReport, classify_mesh, corner_crosses
from mesh.quad_mesh import QuadMesh
from utils.errors import PreimageNotFound

logger = logging.getLogger('assembly')

METHODS = ('itfem', 'fem')


class DofMap:
    """
    Partition of the nodal dofs into free and Dirichlet-constrained sets.

    Dof 2·node + direction. Multiplier column 2·j + direction belongs to
    the j-th concave element.
    """

    def __init__(self, mesh: QuadMesh, loadcase: LoadCase, n_concave: int = 0):
        prescribed = loadcase.prescribed_values(mesh)
        self.n_dofs = mesh.n_dofs
        self.fixed = np.array(sorted(prescribed), dtype=np.int64)
        self.fixed_values = np.array([prescribed[d] for d in self.fixed], dtype=float)
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.fixed] = False
        self.free = np.flatnonzero(mask)
        self.n_lambda = 2 * n_concave

    @property
    def n_free(self) -> int:
        return len(self.free)

    def prescribed_at(self, scale: float) -> np.ndarray:
        return scale * self.fixed_values

    def lambda_index(self, j: int, direction: int) -> int:
        return 2 * j + direction

    def expand(self, u_free: np.ndarray, scale: float) -> np.ndarray:
        """Full displacement vector from free values and the scaled Dirichlet data."""
        u = np.zeros(self.n_dofs)
        u[self.free] = u_free
        u[self.fixed] = self.prescribed_at(scale)
        return u


@dataclass
class State:
    """Newton iterate: full displacement vector and multipliers."""

    u: np.ndarray
    lam: np.ndarray

    @classmethod
    def zero(cls, n_dofs: int, n_lambda: int) -> 'State':
        return cls(np.zeros(n_dofs), np.zeros(n_lambda))

    def copy(self) -> 'State':
        return State(self.u.copy(), self.lam.copy())


@dataclass
class AssembledSystem:
    """
    Saddle blocks over the free dofs.

    Kt and C are restricted to free rows; K_fc couples free rows to
    constrained columns and du_fixed is the Dirichlet increment still to be
    applied, so the Newton right-hand side carries the lifting term.
    """

    Kt: sp.csr_matrix
    C: sp.csc_matrix
    Ru: np.ndarray
    Fext: np.ndarray
    lam: np.ndarray
    K_fc: sp.csr_matrix
    C_fixed: sp.csc_matrix
    du_fixed: np.ndarray
    constraint_value: np.ndarray
    energy: float
    min_det_f: float
    scale: float
    free: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    fixed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    potential: float = 0.0
    symmetric: bool = True
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def n_free(self) -> int:
        return self.Kt.shape[0]

    @property
    def n_lambda(self) -> int:
        return self.C.shape[1]

    def rhs(self):
        """(rhs_u, rhs_c) of the bordered Newton system."""
        rhs_u = -(self.Ru + self.C @ self.lam)
        rhs_c = -self.constraint_value
        if len(self.du_fixed):
            rhs_u = rhs_u - self.K_fc @ self.du_fixed
            rhs_c = rhs_c - self.C_fixed.T @ self.du_fixed
        return rhs_u, rhs_c

    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.Ru + self.C @ self.lam))

    def block_matrix(self) -> sp.csc_matrix:
        """[[Kt, C], [Cᵀ, 0]]"""
        if self.n_lambda == 0:
            return self.Kt.tocsc()
        return sp.bmat([[self.Kt, self.C], [self.C.T, None]], format='csc')


def constraint_matrix(mesh: QuadMesh, report: Optional[TangleReport] = None) -> sp.csc_matrix:
    """
    Sparse (n_dofs × 2·concave_count) jump matrix at the re-entrant vertices.

    Raises:
        PreimageNotFound: with the offending element id
    """
    report = report or classify_mesh(mesh)
    rows, cols, vals = [], [], []
    for j, e in enumerate(report.concave):
        cls = report.classes[e]
        try:
            row = constraint_row(mesh.element_coords(e), cls.reentrant_local)
        except PreimageNotFound as err:
            raise PreimageNotFound(str(err), element=int(e))
        nodes = mesh.elems[e]
        for direction in range(2):
            rows.extend((2 * nodes + direction).tolist())
            cols.extend([2 * j + direction] * 4)
            vals.extend(row.tolist())
    return sp.csc_matrix((vals, (rows, cols)), shape=(mesh.n_dofs, 2 * report.concave_count))


class Discretization:
    """
    Quadrature batches, constraint matrix and sparsity pattern of one mesh.

    Method 'itfem' integrates concave elements over their triangulated
    polygon and adds one constraint per concave element and direction;
    method 'fem' uses 2×2 Gauss everywhere with the signed Jacobian and no
    constraints.
    """

    def __init__(self, mesh: QuadMesh, report: Optional[TangleReport] = None,
                 method: str = 'itfem', refine: int = 2):
        if method not in METHODS:
            raise ValueError(f"Unknown method '{method}', expected one of {METHODS}")
        self.logger = logging.getLogger('assembly')
        self.mesh = mesh
        self.report = report or classify_mesh(mesh)
        self.method = method
        self.refine = refine

        coords = mesh.all_element_coords()
        concave = self.report.concave if method == 'itfem' else np.zeros(0, dtype=np.int64)
        mask = np.ones(mesh.n_elems, dtype=bool)
        mask[concave] = False
        gauss_ids = np.flatnonzero(mask)
        if len(self.report.degenerate):
            self.logger.warning(f"{len(self.report.degenerate)} degenerate elements integrated with 2x2 Gauss")

        self.gauss = gauss_batch(coords[gauss_ids], gauss_ids) if len(gauss_ids) else empty_batch()
        quads = []
        for e in concave:
            try:
                quads.append(triangulate_concave(coords[e], refine, self.report.classes[e].reentrant_local))
            except PreimageNotFound as err:
                raise PreimageNotFound(str(err), element=int(e))
        self.quadratures = dict(zip(concave.tolist(), quads))
        self.concave = (concave_batch(coords[concave], quads, concave) if len(concave)
                        else empty_batch())

        if method == 'itfem':
            self.C = constraint_matrix(mesh, self.report)
        else:
            self.C = sp.csc_matrix((mesh.n_dofs, 0))

        self.order = np.concatenate([self.gauss.elem_ids, self.concave.elem_ids])
        edofs = (2 * mesh.elems[self.order][:, :, None] + np.arange(2)).reshape(-1, 8)
        rows = np.repeat(edofs, 8, axis=1).ravel()
        cols = np.tile(edofs, (1, 8)).ravel()
        n = mesh.n_dofs
        lin = rows * n + cols
        keys, self._scatter = np.unique(lin, return_inverse=True)
        self._indices = (keys % n).astype(np.int64)
        self._indptr = np.concatenate([[0], np.cumsum(np.bincount(keys // n, minlength=n))]).astype(np.int64)
        self.edofs = edofs
        self.logger.debug(
            f"Discretization: {self.gauss.size} Gauss elements, {self.concave.size} concave, "
            f"{len(keys)} stored entries"
        )

    @property
    def n_lambda(self) -> int:
        return self.C.shape[1]

    @property
    def batches(self) -> List[ElementBatch]:
        return [self.gauss, self.concave]

    def element_displacements(self, u: np.ndarray) -> np.ndarray:
        """(E, 4, 2) element displacements in assembly order."""
        return np.asarray(u, dtype=float)[self.edofs].reshape(-1, 4, 2)

    def scatter_vector(self, r: np.ndarray) -> np.ndarray:
        out = np.zeros(self.mesh.n_dofs)
        np.add.at(out, self.edofs.ravel(), r.ravel())
        return out

    def scatter_matrix(self, k: np.ndarray) -> sp.csr_matrix:
        """Sum element matrices into the fixed CSR pattern in assembly order."""
        data = np.bincount(self._scatter, weights=k.ravel(), minlength=len(self._indices))
        n = self.mesh.n_dofs
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(n, n))

    def body_force(self, b) -> np.ndarray:
        """Nodal forces of a dead body force over the integrated element regions."""
        b = np.asarray(b, dtype=float)
        ints = [np.einsum('eq,eqa->ea', batch.w, batch.N) for batch in self.batches]
        na = np.concatenate(ints) if ints else np.zeros((0, 4))
        r = (na[:, :, None] * b[None, None, :]).reshape(-1, 8)
        return self.scatter_vector(r)

    def min_corner_jacobian(self) -> np.ndarray:
        """Smallest corner det J per element."""
        return corner_crosses(self.mesh.all_element_coords()).min(axis=1) / 4.0

    def centroid_det_f(self, u: np.ndarray) -> np.ndarray:
        """det F at the F-bar sampling point of every element, mesh order."""
        out = np.zeros(self.mesh.n_elems)
        ue = self.element_displacements(u)
        gc = np.concatenate([self.gauss.Gc, self.concave.Gc])
        F = np.eye(2) + np.einsum('eai,eaj->eij', ue, gc)
        out[self.order] = np.linalg.det(F)
        return out


def external_force(mesh: QuadMesh, loadcase: LoadCase, scale: float = 1.0,
                   discretization: Optional[Discretization] = None) -> np.ndarray:
    """Dead external forces at load factor `scale`, full dof vector."""
    loadcase.validate(mesh)
    f = np.zeros(mesh.n_dofs)
    for t in loadcase.tractions:
        f += traction_force(mesh, t)
    if loadcase.has_body_force:
        disc = discretization or Discretization(mesh)
        f += disc.body_force(loadcase.body_force)
    return scale * f


class SystemAssembler:
    """Assembles the saddle blocks of one mesh, material and load case."""

    def __init__(self, mesh: QuadMesh, material: MaterialModel, loadcase: LoadCase,
                 report: Optional[TangleReport] = None, method: str = 'itfem', refine: int = 2,
                 fbar: bool = False, deterministic: bool = True, workers: int = 1):
        self.logger = logging.getLogger('assembly')
        self.mesh = mesh
        self.material = material
        self.loadcase = loadcase
        self.fbar = fbar
        self.deterministic = deterministic
        self.workers = max(1, int(workers))
        self.disc = Discretization(mesh, report, method, refine)
        self.dofs = DofMap(mesh, loadcase, self.disc.report.concave_count if method == 'itfem' else 0)
        self._fext_unit = external_force(mesh, loadcase, 1.0, self.disc)

        C = self.disc.C
        self.C_free = C[self.dofs.free].tocsc()
        self.C_fixed = C[self.dofs.fixed].tocsc()

    @property
    def report(self) -> TangleReport:
        return self.disc.report

    @property
    def n_lambda(self) -> int:
        return self.disc.n_lambda

    def initial_state(self) -> State:
        return State.zero(self.mesh.n_dofs, self.n_lambda)

    def _integrate_gauss(self, ue: np.ndarray, tangent: bool) -> BatchResult:
        batch = self.disc.gauss
        if self.deterministic or self.workers == 1 or batch.size < 2 * self.workers:
            return integrate_batch(self.material, ue, batch, self.fbar, tangent)
        chunks = np.array_split(np.arange(batch.size), self.workers)
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            parts = list(pool.map(
                lambda idx: integrate_batch(self.material, ue[idx], batch.subset(idx), self.fbar, tangent),
                chunks,
            ))
        return BatchResult(
            r=np.concatenate([p.r for p in parts]),
            k=np.concatenate([p.k for p in parts]) if tangent else None,
            energy=np.concatenate([p.energy for p in parts]),
            min_det_f=min(p.min_det_f for p in parts),
        )

    def internal(self, u: np.ndarray, tangent: bool = True):
        """Element results of both batches in assembly order."""
        ue = self.disc.element_displacements(u)
        ng = self.disc.gauss.size
        gauss = self._integrate_gauss(ue[:ng], tangent)
        concave = integrate_batch(self.material, ue[ng:], self.disc.concave, self.fbar, tangent)
        r = np.concatenate([gauss.r, concave.r])
        k = np.concatenate([gauss.k, concave.k]) if tangent else None
        energy = float(np.sum(gauss.energy) + np.sum(concave.energy))
        return r, k, energy, min(gauss.min_det_f, concave.min_det_f)

    def external(self, scale: float) -> np.ndarray:
        return scale * self._fext_unit

    def assemble(self, state: State, scale: float) -> AssembledSystem:
        t0 = time.perf_counter()
        r, k, energy, min_det = self.internal(state.u)
        K = self.disc.scatter_matrix(k)
        fint = self.disc.scatter_vector(r)
        fext = self.external(scale)
        t1 = time.perf_counter()

        free, fixed = self.dofs.free, self.dofs.fixed
        du_fixed = self.dofs.prescribed_at(scale) - state.u[fixed]
        Kt = K[free][:, free].tocsr()
        return AssembledSystem(
            Kt=Kt,
            C=self.C_free,
            Ru=(fint - fext)[free],
            Fext=fext[free],
            lam=state.lam.copy(),
            K_fc=K[free][:, fixed].tocsr(),
            C_fixed=self.C_fixed,
            du_fixed=du_fixed,
            constraint_value=self.disc.C.T @ state.u,
            energy=energy,
            min_det_f=min_det,
            scale=scale,
            free=free,
            fixed=fixed,
            potential=energy - float(fext @ state.u) + float(state.lam @ (self.disc.C.T @ state.u)),
            symmetric=not self.fbar,
            timings={'assembly': t1 - t0},
        )

    def total_potential(self, state: State, scale: float) -> float:
        """Internal energy − external work + λ·Cᵀu."""
        _, _, energy, _ = self.internal(state.u, tangent=False)
        return energy - float(self.external(scale) @ state.u) + float(state.lam @ (self.disc.C.T @ state.u))

    def constraint_residual(self, u: np.ndarray) -> float:
        """max |Cᵀu| over all scalar constraints, 0 without constraints."""
        if self.n_lambda == 0:
            return 0.0
        return float(np.max(np.abs(self.disc.C.T @ u)))


def assemble(mesh: QuadMesh, report: Optional[TangleReport], material: MaterialModel,
             loadcase: LoadCase, state: State, scale: float, method: str = 'itfem',
             fbar: bool = False, refine: int = 2) -> AssembledSystem:
    """One-shot assembly; iterative drivers keep a SystemAssembler instead."""
    return SystemAssembler(mesh, material, loadcase, report, method, refine, fbar).assemble(state, scale)


def total_potential(mesh: QuadMesh, material: MaterialModel, loadcase: LoadCase, state: State,
                    scale: float, report: Optional[TangleReport] = None, method: str = 'itfem') -> float:
    return SystemAssembler(mesh, material, loadcase, report, method).total_potential(state, scale)
