"""
Incremental loading with Newton-Raphson on the saddle system.
"""

import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import psutil

from assembly.loads import LoadCase
from assembly.system import METHODS, AssembledSystem, State, SystemAssembler
from core.material import MaterialModel
from mesh.classify import TangleReport
from mesh.quad_mesh import QuadMesh
from monitoring.newton_monitor import NewtonMonitor
from solver.saddle import saddle_solve
from storage.models import RunResult, StepResult
from utils.errors import ConfigError, Diverged, NonPositiveJacobianState, SingularSystem


@dataclass
class SolverConfig:
    """Load stepping and Newton controls."""

    load_steps: int = 10
    newton_tol: float = 1e-9
    max_newton: int = 50
    step_cut: bool = False
    max_halvings: int = 6
    fbar: bool = False
    deterministic: bool = True
    method: str = 'itfem'
    refine: int = 2
    divergence_window: int = 3
    workers: int = 1

    def __post_init__(self):
        if self.load_steps < 1 or self.max_newton < 1 or self.refine < 0 or self.max_halvings < 0:
            raise ConfigError("load_steps and max_newton must be positive; refine and max_halvings non-negative")
        if not self.newton_tol > 0:
            raise ConfigError(f"newton_tol must be positive, got {self.newton_tol}")
        if self.method not in METHODS:
            raise ConfigError(f"Unknown method '{self.method}', expected one of {list(METHODS)}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'load_steps': self.load_steps,
            'newton_tol': self.newton_tol,
            'max_newton': self.max_newton,
            'step_cut': {'enabled': self.step_cut, 'max_halvings': self.max_halvings},
            'fbar': self.fbar,
            'deterministic': self.deterministic,
            'method': self.method,
            'refine': self.refine,
            'divergence_window': self.divergence_window,
            'workers': self.workers,
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'SolverConfig':
        data = dict(data or {})
        step_cut = data.pop('step_cut', {})
        if isinstance(step_cut, dict):
            data['step_cut'] = bool(step_cut.get('enabled', False))
            data['max_halvings'] = int(step_cut.get('max_halvings', data.get('max_halvings', 6)))
        else:
            data['step_cut'] = bool(step_cut)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown solver options: {sorted(unknown)}")
        return cls(**data)


def newton_step(state: State, assembled: AssembledSystem) -> State:
    """û += Δû and λ̂ += Δλ̂ from one bordered solve; Dirichlet increments applied by lifting."""
    rhs_u, rhs_c = assembled.rhs()
    du, dlam = saddle_solve(assembled.Kt, assembled.C, rhs_u, rhs_c, assembled.symmetric)
    u = state.u.copy()
    u[assembled.free] += du
    u[assembled.fixed] += assembled.du_fixed
    return State(u, state.lam + dlam)


class NewtonSolver:
    """Runs the load ramp of one problem."""

    def __init__(self, mesh: QuadMesh, material: MaterialModel, loadcase: LoadCase,
                 config: Optional[SolverConfig] = None, report: Optional[TangleReport] = None,
                 probes: Optional[Dict[str, Tuple[int, int]]] = None,
                 monitor: Optional[NewtonMonitor] = None):
        """
        Args:
            probes: name -> (node, component) sampled after every load step
        """
        self.config = config or SolverConfig()
        self.logger = logging.getLogger('solver')
        self.mesh = mesh
        self.assembler = SystemAssembler(
            mesh, material, loadcase, report,
            method=self.config.method, refine=self.config.refine, fbar=self.config.fbar,
            deterministic=self.config.deterministic, workers=self.config.workers,
        )
        self.probes = dict(probes or {})
        self.monitor = monitor or NewtonMonitor({'divergence_window': self.config.divergence_window})
        self.timings = {'assembly': 0.0, 'solve': 0.0}
        self.peak_memory_mb = 0.0

    def _sample_memory(self):
        rss = psutil.Process().memory_info().rss / 1e6
        self.peak_memory_mb = max(self.peak_memory_mb, rss)

    def solve_step(self, state: State, scale: float, step: int) -> Tuple[State, StepResult]:
        """
        Newton iterations at a fixed load factor, starting with λ̂ = 0.

        Raises:
            Diverged: max_newton reached, non-finite increment or growing ‖Δu‖
            NonPositiveJacobianState, SingularSystem: from assembly and the solve
        """
        cfg = self.config
        state = State(state.u.copy(), np.zeros(self.assembler.n_lambda))
        self.monitor.start_step(step, scale)
        system = None

        for _ in range(cfg.max_newton):
            t0 = time.perf_counter()
            system = self.assembler.assemble(state, scale)
            t1 = time.perf_counter()
            new_state = newton_step(state, system)
            self.timings['assembly'] += t1 - t0
            self.timings['solve'] += time.perf_counter() - t1

            du = float(np.linalg.norm(new_state.u - state.u))
            self.monitor.record(du, system.residual_norm(), system.potential)
            if not np.isfinite(du):
                self.monitor.diverged("non-finite increment")
                raise Diverged(step, self._history(), reason="non-finite increment")
            state = new_state
            if du < cfg.newton_tol:
                break
            if self.monitor.is_diverging():
                reason = f"|du| increased {cfg.divergence_window} consecutive iterations"
                self.monitor.diverged(reason)
                raise Diverged(step, self._history(), reason=reason)
        else:
            self.monitor.diverged("max_newton reached")
            raise Diverged(step, self._history(), reason=f"max_newton ({cfg.max_newton}) reached")

        _, _, energy, min_det = self.assembler.internal(state.u, tangent=False)
        final_potential = (energy - float(self.assembler.external(scale) @ state.u)
                           + float(state.lam @ (self.assembler.disc.C.T @ state.u)))
        self.monitor.converged()
        result = StepResult(
            load_factor=scale,
            u=state.u.copy(),
            lam=state.lam.copy(),
            newton_iters=len(self.monitor.records),
            residual_history=self.monitor.du_history,
            min_det_f=min_det,
            constraint_residual=self.assembler.constraint_residual(state.u),
            potential_history=self.monitor.potential_history + [final_potential],
        )
        return state, result

    def _history(self) -> List[Dict[str, Any]]:
        return [r.to_dict() for r in self.monitor.records]

    def _probe_values(self, u: np.ndarray) -> Dict[str, float]:
        return {name: float(u[2 * node + comp]) for name, (node, comp) in self.probes.items()}

    def _result(self, steps: List[StepResult], state: State, started: float, converged: bool) -> RunResult:
        probes: Dict[str, List[float]] = {name: [] for name in self.probes}
        for s in steps:
            for name, value in self._probe_values(s.u).items():
                probes[name].append(value)
        return RunResult(
            steps=steps,
            u=state.u.copy(),
            probes=probes,
            wall_time=time.perf_counter() - started,
            converged=converged,
            peak_memory_mb=self.peak_memory_mb,
            timings=dict(self.timings),
            concave_count=self.assembler.n_lambda // 2,
        )

    def run(self) -> RunResult:
        """
        Ramp the load factor k/load_steps, halving failed increments when enabled.

        Raises:
            Diverged: carries the RunResult of the converged steps as `partial`
        """
        cfg = self.config
        started = time.perf_counter()
        state = self.assembler.initial_state()
        steps: List[StepResult] = []
        factor = 0.0

        self.logger.info(
            f"Run: {self.mesh.n_elems} elements, {self.assembler.dofs.n_free} free dofs, "
            f"{self.assembler.n_lambda} multipliers, method={cfg.method}, fbar={cfg.fbar}"
        )
        for k in range(1, cfg.load_steps + 1):
            target = k / cfg.load_steps
            increment = target - factor
            cuts = 0
            iterations = 0
            step_result = None
            while factor < target:
                trial = factor + increment
                if trial > target or target - trial < 1e-12:
                    trial = target
                try:
                    state, step_result = self.solve_step(state, trial, k)
                    iterations += step_result.newton_iters
                    factor = trial
                except (Diverged, NonPositiveJacobianState, SingularSystem) as e:
                    history = e.history if isinstance(e, Diverged) else self._history()
                    if cfg.step_cut and cuts < cfg.max_halvings:
                        cuts += 1
                        increment *= 0.5
                        self.logger.warning(f"Step {k}: cutting increment to {increment:.6g} after: {e}")
                        continue
                    reason = e.reason if isinstance(e, Diverged) else str(e)
                    self.logger.warning(f"Run diverged at load step {k}: {reason}")
                    partial = self._result(steps, state, started, converged=False)
                    raise Diverged(k, history, partial=partial, reason=reason)

            step_result.cuts = cuts
            step_result.newton_iters = iterations
            steps.append(step_result)
            self._sample_memory()
            self.logger.info(
                f"Load step {k}/{cfg.load_steps}: factor={target:.6g} iters={iterations} "
                f"|du|={step_result.residual_history[-1]:.3e} min detF={step_result.min_det_f:.6g}"
            )

        result = self._result(steps, state, started, converged=True)
        self.logger.info(f"Run finished in {result.wall_time:.2f}s, peak memory {self.peak_memory_mb:.1f} MB")
        return result


def run(mesh: QuadMesh, material: MaterialModel, loadcase: LoadCase,
        config: Optional[SolverConfig] = None, report: Optional[TangleReport] = None,
        probes: Optional[Dict[str, Tuple[int, int]]] = None) -> RunResult:
    return NewtonSolver(mesh, material, loadcase, config, report, probes).run()
