"""Reference fields, error norms, probes, convergence studies and sweeps."""

from analysis.convergence import STUDY_METHODS, convergence_study, reference_solution
from analysis.norms import fit_slope, h1_seminorm_difference, h1_seminorm_error, probe
from analysis.reference import BucketLocator, ReferenceField
from analysis.sweeps import poisson_sweep, single_concave_sweep

__all__ = [
    'STUDY_METHODS', 'convergence_study', 'reference_solution',
    'fit_slope', 'h1_seminorm_difference', 'h1_seminorm_error', 'probe',
    'BucketLocator', 'ReferenceField',
    'poisson_sweep', 'single_concave_sweep',
]
