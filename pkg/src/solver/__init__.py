"""Saddle solve, Newton load stepping and conditioning."""

from solver.conditioning import condition_number
from solver.newton import NewtonSolver, SolverConfig, newton_step, run
from solver.saddle import saddle_solve

__all__ = ['condition_number', 'NewtonSolver', 'SolverConfig', 'newton_step', 'run', 'saddle_solve']
