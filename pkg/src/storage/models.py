"""
Data models for solver runs and convergence studies.
"""

from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional
import time
import json

import numpy as np


def _array(value) -> np.ndarray:
    return np.asarray(value if value is not None else [], dtype=float)


@dataclass
class StepResult:
    """Converged state of one load step."""

    load_factor: float
    u: np.ndarray
    lam: np.ndarray
    newton_iters: int
    residual_history: List[float]
    min_det_f: float
    constraint_residual: float = 0.0
    potential_history: List[float] = field(default_factory=list)
    cuts: int = 0

    def check_history(self) -> bool:
        """Final two Newton corrections strictly decrease."""
        h = self.residual_history
        return len(h) < 2 or h[-1] < h[-2]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            'load_factor': self.load_factor,
            'u': self.u.tolist(),
            'lam': self.lam.tolist(),
            'newton_iters': self.newton_iters,
            'residual_history': list(self.residual_history),
            'min_det_f': self.min_det_f,
            'constraint_residual': self.constraint_residual,
            'potential_history': list(self.potential_history),
            'cuts': self.cuts,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StepResult':
        """Create from dictionary."""
        data = dict(data)
        data['u'] = _array(data.get('u'))
        data['lam'] = _array(data.get('lam'))
        return cls(**data)


@dataclass
class RunResult:
    """Load steps, final displacement and diagnostics of one solver run."""

    steps: List[StepResult]
    u: np.ndarray
    probes: Dict[str, List[float]] = field(default_factory=dict)
    wall_time: float = 0.0
    converged: bool = True
    peak_memory_mb: float = 0.0
    timings: Dict[str, float] = field(default_factory=dict)
    concave_count: int = 0
    started_at: float = field(default_factory=time.time)

    @property
    def final(self) -> Optional[StepResult]:
        return self.steps[-1] if self.steps else None

    @property
    def load_factors(self) -> List[float]:
        return [s.load_factor for s in self.steps]

    @property
    def max_constraint_residual(self) -> float:
        return max((s.constraint_residual for s in self.steps), default=0.0)

    @property
    def min_det_f(self) -> float:
        return min((s.min_det_f for s in self.steps), default=float('nan'))

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            'steps': [s.to_dict() for s in self.steps],
            'u': self.u.tolist(),
            'probes': {k: list(v) for k, v in self.probes.items()},
            'wall_time': self.wall_time,
            'converged': self.converged,
            'peak_memory_mb': self.peak_memory_mb,
            'timings': dict(self.timings),
            'concave_count': self.concave_count,
            'started_at': self.started_at,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunResult':
        """Create from dictionary."""
        data = dict(data)
        data['steps'] = [StepResult.from_dict(s) for s in data.get('steps', [])]
        data['u'] = _array(data.get('u'))
        return cls(**data)

    def summary(self) -> Dict[str, Any]:
        """Scalar digest without field arrays."""
        return {
            'steps': len(self.steps),
            'converged': self.converged,
            'newton_iters': [s.newton_iters for s in self.steps],
            'max_constraint_residual': self.max_constraint_residual,
            'min_det_f': self.min_det_f,
            'wall_time': self.wall_time,
            'peak_memory_mb': self.peak_memory_mb,
            'probes': {k: v[-1] if v else None for k, v in self.probes.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), default=str)


@dataclass
class ConvergenceRow:
    """One mesh of a convergence study; `failed` rows keep NaN values."""

    n: int
    h: float
    dofs: int
    probe: float = float('nan')
    h1_error: float = float('nan')
    condition: float = float('nan')
    newton_iters: int = 0
    failed: bool = False
    message: str = ''

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            'n': self.n,
            'h': self.h,
            'dofs': self.dofs,
            'probe': self.probe,
            'h1_error': self.h1_error,
            'condition': self.condition,
            'newton_iters': self.newton_iters,
            'failed': self.failed,
            'message': self.message,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ConvergenceRow':
        """Create from dictionary."""
        return cls(**data)


@dataclass
class ConvergenceTable:
    """Rows of one study method plus the fitted H1 rate."""

    problem: str
    method: str
    rows: List[ConvergenceRow] = field(default_factory=list)
    slope: float = float('nan')
    slope_residual: float = float('nan')
    condition_slope: float = float('nan')

    @property
    def successful(self) -> List[ConvergenceRow]:
        return [r for r in self.rows if not r.failed]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            'problem': self.problem,
            'method': self.method,
            'rows': [r.to_dict() for r in self.rows],
            'slope': self.slope,
            'slope_residual': self.slope_residual,
            'condition_slope': self.condition_slope,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ConvergenceTable':
        """Create from dictionary."""
        data = dict(data)
        data['rows'] = [ConvergenceRow.from_dict(r) for r in data.get('rows', [])]
        return cls(**data)
