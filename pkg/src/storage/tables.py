"""
CSV tables: step histories, convergence studies and sweeps.

Floats are written with 17 significant digits in scientific notation so
deterministic runs reproduce files byte for byte.
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

from storage.models import ConvergenceTable, RunResult

logger = logging.getLogger('storage')


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return '' if np.isnan(value) else f"{float(value):.16e}"
    return '' if value is None else str(value)


def write_rows(rows: List[Dict[str, Any]], columns: Sequence[str], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path


def read_rows(path) -> List[Dict[str, str]]:
    with open(path, 'r', newline='') as f:
        return list(csv.DictReader(f))


STEP_COLUMNS = ['step', 'load_factor', 'newton_iters', 'final_du_norm', 'min_det_f',
                'constraint_residual', 'cuts']


def write_steps_csv(result: RunResult, path) -> Path:
    """One row per load step with every probe as an extra column."""
    probe_names = sorted(result.probes)
    rows = []
    for i, step in enumerate(result.steps):
        row = {
            'step': i + 1,
            'load_factor': step.load_factor,
            'newton_iters': step.newton_iters,
            'final_du_norm': step.residual_history[-1] if step.residual_history else float('nan'),
            'min_det_f': step.min_det_f,
            'constraint_residual': step.constraint_residual,
            'cuts': step.cuts,
        }
        for name in probe_names:
            row[name] = result.probes[name][i]
        rows.append(row)
    return write_rows(rows, STEP_COLUMNS + probe_names, path)


TABLE_COLUMNS = ['n', 'h', 'dofs', 'probe', 'h1_error', 'condition', 'newton_iters', 'failed', 'message',
                 'h1_slope', 'slope_residual', 'condition_slope']


def write_table_csv(table: ConvergenceTable, path) -> Path:
    """
    Study rows followed by a footer row labelled 'slope'.

    The fitted values live in their own columns, which are empty on study rows.
    """
    rows = [r.to_dict() for r in table.rows]
    rows.append({'n': 'slope', 'message': f"{table.problem}/{table.method}",
                 'h1_slope': table.slope, 'slope_residual': table.slope_residual,
                 'condition_slope': table.condition_slope})
    return write_rows(rows, TABLE_COLUMNS, path)


def write_displacement_csv(u: np.ndarray, path) -> Path:
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    rows = [{'node': i, 'ux': ux, 'uy': uy} for i, (ux, uy) in enumerate(u)]
    return write_rows(rows, ['node', 'ux', 'uy'], path)


def read_displacement_csv(path, n_nodes: int) -> np.ndarray:
    u = np.zeros((n_nodes, 2))
    for row in read_rows(path):
        u[int(row['node'])] = (float(row['ux']), float(row['uy']))
    return u.reshape(-1)
