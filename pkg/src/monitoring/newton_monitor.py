"""
Newton convergence monitoring.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional


@dataclass
class IterationRecord:
    """One Newton iteration of a load step."""

    step: int
    iteration: int
    load_factor: float
    du_norm: float
    residual_norm: float
    potential: float
    timestamp: float = field(default_factory=time.time)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'step': self.step,
            'iteration': self.iteration,
            'load_factor': self.load_factor,
            'du_norm': self.du_norm,
            'residual_norm': self.residual_norm,
            'potential': self.potential,
            'timestamp': self.timestamp,
        }


class NewtonMonitor:
    """Tracks the Newton history of the current load step and flags divergence."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Initialize the monitor.

        Args:
            config: solver section; reads `divergence_window` (default 3)
        """
        config = config or {}
        self.logger = logging.getLogger('newton_monitor')
        self.divergence_window = int(config.get('divergence_window', 3))

        self.records: List[IterationRecord] = []
        self.step = 0
        self.load_factor = 0.0

        self.iteration_callbacks: List[Callable[[IterationRecord], None]] = []
        self.divergence_callbacks: List[Callable[[List[IterationRecord]], None]] = []
        self.step_callbacks: List[Callable[[int, float, List[IterationRecord]], None]] = []

    def add_iteration_callback(self, callback: Callable[[IterationRecord], None]):
        """Add callback invoked after every Newton iteration."""
        self.iteration_callbacks.append(callback)

    def add_divergence_callback(self, callback: Callable[[List[IterationRecord]], None]):
        """Add callback invoked when a step is declared divergent."""
        self.divergence_callbacks.append(callback)

    def add_step_callback(self, callback: Callable[[int, float, List[IterationRecord]], None]):
        """Add callback invoked when a step converges."""
        self.step_callbacks.append(callback)

    def start_step(self, step: int, load_factor: float):
        self.step = step
        self.load_factor = load_factor
        self.records = []

    def record(self, du_norm: float, residual_norm: float = float('nan'),
               potential: float = float('nan')) -> IterationRecord:
        rec = IterationRecord(self.step, len(self.records) + 1, self.load_factor,
                              float(du_norm), float(residual_norm), float(potential))
        self.records.append(rec)
        self.logger.debug(
            f"step {self.step} iter {rec.iteration}: |du|={rec.du_norm:.3e} |R|={rec.residual_norm:.3e}"
        )
        self._notify(self.iteration_callbacks, rec)
        return rec

    @property
    def du_history(self) -> List[float]:
        return [r.du_norm for r in self.records]

    @property
    def potential_history(self) -> List[float]:
        return [r.potential for r in self.records]

    def is_diverging(self) -> bool:
        """‖Δu‖ grew in each of the last `divergence_window` iterations."""
        h = self.du_history
        if len(h) <= self.divergence_window:
            return False
        tail = h[-(self.divergence_window + 1):]
        return all(b > a for a, b in zip(tail, tail[1:]))

    def diverged(self, reason: str):
        self.logger.warning(f"Load step {self.step} (factor {self.load_factor:.6g}) diverged: {reason}")
        self._notify(self.divergence_callbacks, list(self.records))

    def converged(self):
        self.logger.debug(f"Load step {self.step} converged in {len(self.records)} iterations")
        self._notify(self.step_callbacks, self.step, self.load_factor, list(self.records))

    def _notify(self, callbacks: List[Callable], *args):
        for callback in callbacks:
            try:
                callback(*args)
            except Exception as e:
                self.logger.error(f"Newton monitor callback failed: {e}")

    def get_status(self) -> Dict[str, Any]:
        return {
            'step': self.step,
            'load_factor': self.load_factor,
            'iterations': len(self.records),
            'last_du_norm': self.records[-1].du_norm if self.records else None,
            'diverging': self.is_diverging(),
        }
