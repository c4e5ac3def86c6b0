"""
Mesh convergence studies: one solver run per mesh index.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Any, Dict, Optional, Sequence, Tuple

from analysis.norms import fit_slope, h1_seminorm_error
from analysis.reference import ReferenceField
from assembly.system import State
from problems.presets import PRESETS, Problem
from solver.conditioning import condition_number
from solver.newton import NewtonSolver, SolverConfig
from storage.models import ConvergenceRow, ConvergenceTable, RunResult
from utils.config import thread_count
from utils.errors import ConfigError, Diverged, TangledFEMError

logger = logging.getLogger('analysis')

STUDY_METHODS = ('fem_regular', 'fem_tangled', 'itfem_tangled')


def method_settings(method: str, tangle: Any) -> Tuple[Any, str]:
    """(tangle spec, assembly method) of a study method."""
    if method == 'fem_regular':
        return 'none', 'fem'
    if method == 'fem_tangled':
        return tangle, 'fem'
    if method == 'itfem_tangled':
        return tangle, 'itfem'
    raise ConfigError(f"Unknown study method '{method}'; expected one of {list(STUDY_METHODS)}")


def solve_problem(problem: Problem, config: SolverConfig) -> Tuple[RunResult, NewtonSolver]:
    solver = NewtonSolver(problem.mesh, problem.material, problem.loadcase, config, probes=problem.probes)
    return solver.run(), solver


def reference_solution(preset: str, n: int, config: Optional[SolverConfig] = None,
                       material: Optional[Dict[str, Any]] = None) -> Tuple[Problem, RunResult, ReferenceField]:
    """Regular-mesh run at index n used as the study reference."""
    problem = PRESETS[preset](n, 'none', material)
    config = replace(config or SolverConfig(), method='fem')
    logger.info(f"Computing {preset} reference at n={n} ({problem.mesh.n_elems} elements)")
    result, _ = solve_problem(problem, config)
    return problem, result, ReferenceField(problem.mesh, result.u)


def first_probe(result: RunResult) -> float:
    if not result.probes:
        return float('nan')
    values = result.probes[sorted(result.probes)[0]]
    return float(values[-1]) if values else float('nan')


def study_row(preset: str, n: int, method: str, tangle: Any, config: SolverConfig,
              material: Optional[Dict[str, Any]] = None, reference: Optional[ReferenceField] = None,
              condition: bool = False) -> ConvergenceRow:
    """One row of a study; solver and mesh failures mark the row failed."""
    tangle_spec, assembly_method = method_settings(method, tangle)
    try:
        problem = PRESETS[preset](n, tangle_spec, material)
    except TangledFEMError as e:
        logger.error(f"{preset} n={n} {method}: mesh generation failed: {e}")
        return ConvergenceRow(n=n, h=float('nan'), dofs=0, failed=True, message=str(e))

    row = ConvergenceRow(n=n, h=problem.h, dofs=problem.mesh.n_dofs)
    try:
        result, solver = solve_problem(problem, replace(config, method=assembly_method))
    except Diverged as e:
        logger.error(f"{preset} n={n} {method}: {e}")
        row.failed, row.message = True, e.reason
        return row
    except TangledFEMError as e:
        logger.error(f"{preset} n={n} {method}: {e}")
        row.failed, row.message = True, str(e)
        return row

    row.probe = first_probe(result)
    row.newton_iters = int(sum(s.newton_iters for s in result.steps))
    if reference is not None:
        row.h1_error = h1_seminorm_error(problem.mesh, result.u, reference, solver.assembler.report)
    if condition:
        final = State(result.u, result.final.lam)
        row.condition = condition_number(solver.assembler.assemble(final, 1.0))
    logger.info(f"{preset} n={n} {method}: probe={row.probe:.6g} h1={row.h1_error:.4e}")
    return row


def convergence_study(preset: str, method: str, n_values: Sequence[int],
                      config: Optional[SolverConfig] = None, tangle: Any = 'checkerboard',
                      material: Optional[Dict[str, Any]] = None,
                      reference: Optional[ReferenceField] = None, reference_n: Optional[int] = None,
                      condition: bool = False, workers: Optional[int] = None) -> ConvergenceTable:
    """
    Run `method` on every mesh index and fit the H1 error rate.

    Rows run concurrently when `workers` (default TFEM_THREADS) exceeds one;
    the table is ordered by n either way.
    """
    if preset not in PRESETS:
        raise ConfigError(f"Unknown preset '{preset}'; expected one of {sorted(PRESETS)}")
    method_settings(method, tangle)
    config = config or SolverConfig()
    if reference is None and reference_n is not None:
        _, _, reference = reference_solution(preset, reference_n, config, material)

    workers = workers or thread_count()
    n_values = sorted(int(n) for n in n_values)
    args = [(preset, n, method, tangle, config, material, reference, condition) for n in n_values]
    if workers > 1 and len(n_values) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda a: study_row(*a), args))
    else:
        rows = [study_row(*a) for a in args]

    table = ConvergenceTable(problem=preset, method=method, rows=rows)
    ok = table.successful
    table.slope, table.slope_residual = fit_slope([r.h for r in ok], [r.h1_error for r in ok])
    if condition:
        table.condition_slope, _ = fit_slope([r.h for r in ok], [r.condition for r in ok])
    logger.info(f"Study {preset}/{method}: slope={table.slope:.4f} ({len(ok)}/{len(rows)} rows)")
    return table
