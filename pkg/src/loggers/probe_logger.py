"""
JSON-lines log of per-step probe values and solver diagnostics.
"""

import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from storage.models import RunResult, StepResult


class ProbeLogger:
    """Appends one JSON object per converged load step."""

    def __init__(self, config: Dict[str, Any], run_name: str = 'run'):
        """
        Args:
            config: run configuration; reads outputs.directory
            run_name: file stem of the log
        """
        self.config = config
        self.logger = logging.getLogger('probe_logger')
        outputs = config.get('outputs', {})
        self.log_path = Path(outputs.get('directory', 'results')) / f"{run_name}_probes.jsonl"
        self.log_path.parent.mkdir(parents=True, exist_ok=True)

    def _write_log_entry(self, entry: Dict[str, Any]):
        with open(self.log_path, 'a') as f:
            f.write(json.dumps(entry, sort_keys=True) + '\n')

    def _step_entry(self, index: int, step: StepResult, probes: Dict[str, float]) -> Dict[str, Any]:
        return {
            'log_type': 'load_step',
            'step': index,
            'load_factor': step.load_factor,
            'newton_iters': step.newton_iters,
            'final_du_norm': step.residual_history[-1] if step.residual_history else None,
            'min_det_f': step.min_det_f,
            'constraint_residual': step.constraint_residual,
            'cuts': step.cuts,
            'probes': probes,
        }

    def log_run(self, result: RunResult, failure: Optional[str] = None):
        """Write every step of a (possibly partial) run, then a summary line."""
        try:
            self.log_path.write_text('')
            for i, step in enumerate(result.steps):
                probes = {name: values[i] for name, values in result.probes.items() if i < len(values)}
                self._write_log_entry(self._step_entry(i + 1, step, probes))
            summary = {
                'log_type': 'run_summary',
                'converged': result.converged,
                'steps': len(result.steps),
                'max_constraint_residual': result.max_constraint_residual,
                'failure': failure,
            }
            if not self.config.get('solver', {}).get('deterministic', True):
                summary['wall_time'] = result.wall_time
                summary['peak_memory_mb'] = result.peak_memory_mb
                summary['logged_at'] = time.time()
            self._write_log_entry(summary)
            self.logger.info(f"Probe log written to {self.log_path}")
        except OSError as e:
            self.logger.error(f"Failed to write probe log: {e}")
            raise

    def read_entries(self) -> List[Dict[str, Any]]:
        if not self.log_path.exists():
            return []
        with open(self.log_path, 'r') as f:
            return [json.loads(line) for line in f if line.strip()]
