"""
Parameter sweeps: single-concave tangling magnitude and Poisson ratio.

A point whose run fails keeps NaN values and sets its `<method>_diverged` flag.
"""

import logging
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from analysis.convergence import first_probe, method_settings, reference_solution, solve_problem
from problems.presets import PRESETS
from solver.newton import SolverConfig
from utils.errors import ConfigError, TangledFEMError

logger = logging.getLogger('analysis')

SINGLE_D_VALUES = (0.15, 0.2, 0.25, 0.3)
POISSON_VALUES = (0.49, 0.495, 0.4995, 0.49995)
POISSON_METHODS = ('fem_regular', 'fem_tangled', 'itfem_tangled')


def _point_value(preset: str, n: int, method: str, tangle: Any, config: SolverConfig,
           material: Optional[Dict[str, Any]]) -> Tuple[float, bool]:
    """(value at the first tracked point, diverged); a failed run gives (nan, True)."""
    tangle_spec, assembly_method = method_settings(method, tangle)
    try:
        problem = PRESETS[preset](n, tangle_spec, material)
        result, _ = solve_problem(problem, replace(config, method=assembly_method))
    except ConfigError:
        raise
    except TangledFEMError as e:
        logger.warning(f"{preset} n={n} {method} tangle={tangle_spec} diverged: {e}")
        return float('nan'), True
    return first_probe(result), False


def _relative(value: float, reference: float, scale: float) -> float:
    return abs(value - reference) / abs(scale)


def single_concave_sweep(n: int = 3, d_values: Sequence[float] = SINGLE_D_VALUES,
                         reference_n: int = 7, config: Optional[SolverConfig] = None,
                         material: Optional[Dict[str, Any]] = None) -> List[Dict[str, Any]]:
    """
    Tip error of FEM and i-TFEM on Cook meshes with one concave element of depth d.

    `*_error` is measured against the regular reference at `reference_n`.
    `*_excess` is the part caused by the tangle: the distance to the regular
    mesh of the same index, scaled by the reference.
    """
    config = config or SolverConfig()
    _, ref_run, _ = reference_solution('cooks', reference_n, config, material)
    reference = first_probe(ref_run)
    regular, regular_diverged = _point_value('cooks', n, 'fem_regular', 'none', config, material)
    if regular_diverged:
        logger.warning(f"cooks n={n} regular run failed; excess errors are NaN")

    rows = []
    for d in d_values:
        tangle = {'kind': 'single', 'magnitude': float(d)}
        fem, fem_diverged = _point_value('cooks', n, 'fem_tangled', tangle, config, material)
        itfem, itfem_diverged = _point_value('cooks', n, 'itfem_tangled', tangle, config, material)
        rows.append({
            'd': float(d),
            'reference_tip': reference,
            'regular_tip': regular,
            'fem_tip': fem,
            'itfem_tip': itfem,
            'fem_error': _relative(fem, reference, reference),
            'itfem_error': _relative(itfem, reference, reference),
            'fem_excess': _relative(fem, regular, reference),
            'itfem_excess': _relative(itfem, regular, reference),
            'fem_diverged': fem_diverged,
            'itfem_diverged': itfem_diverged,
        })
        logger.info(
            f"single d={d}: fem excess {rows[-1]['fem_excess']:.3e}"
            f"{' (diverged)' if fem_diverged else ''}, itfem excess {rows[-1]['itfem_excess']:.3e}"
            f"{' (diverged)' if itfem_diverged else ''}"
        )
    return rows


def poisson_sweep(preset: str = 'punch', n: int = 2, nu_values: Sequence[float] = POISSON_VALUES,
                  tangle: Any = 'block_center', mu: float = 500.0, model: str = 'neo_hookean',
                  config: Optional[SolverConfig] = None) -> List[Dict[str, Any]]:
    """Probe values of the three study methods for each ν at fixed μ."""
    config = config or SolverConfig()
    rows = []
    for nu in nu_values:
        material = {'model': model, 'mu': mu, 'nu': float(nu)}
        row: Dict[str, Any] = {'nu': float(nu)}
        for method in POISSON_METHODS:
            row[method], row[f"{method}_diverged"] = _point_value(preset, n, method, tangle, config, material)
        row['itfem_gap'] = abs(row['itfem_tangled'] - row['fem_regular'])
        rows.append(row)
        logger.info(f"nu={nu}: {row}")
    return rows


SWEEP_COLUMNS = {
    'single': ['d', 'reference_tip', 'regular_tip', 'fem_tip', 'itfem_tip', 'fem_error',
               'itfem_error', 'fem_excess', 'itfem_excess', 'fem_diverged', 'itfem_diverged'],
    'poisson': ['nu', 'fem_regular', 'fem_tangled', 'itfem_tangled', 'itfem_gap']
               + [f"{m}_diverged" for m in POISSON_METHODS],
}
