#!/usr/bin/env python3
"""
Tangled FEM - Main Entry Point

Generates benchmark meshes, runs nonlinear i-TFEM analyses on tangled Q4
meshes and drives convergence studies and parameter sweeps.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict

import click
import numpy as np

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from analysis.convergence import convergence_study, reference_solution  # noqa: E402
from analysis.sweeps import SWEEP_COLUMNS, poisson_sweep, single_concave_sweep  # noqa: E402
from assembly.system import Discretization  # noqa: E402
from loggers.probe_logger import ProbeLogger  # noqa: E402
from mesh.classify import classify_mesh  # noqa: E402
from mesh.generators import GENERATORS, generate  # noqa: E402
from mesh.mesh_io import read_mesh, write_mesh  # noqa: E402
from problems.presets import Problem, build_problem  # noqa: E402
from solver.newton import NewtonSolver  # noqa: E402
from storage.models import RunResult  # noqa: E402
from storage.tables import read_displacement_csv, write_rows, write_steps_csv, write_table_csv  # noqa: E402
from storage.vtk_writer import write_vtk  # noqa: E402
from utils.config import load_config, validate_run_config  # noqa: E402
from utils.errors import ConfigError, Diverged, MeshError, TangledFEMError  # noqa: E402
from utils.logger import set_console_level, setup_logging  # noqa: E402

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

MESH_PRESETS = sorted(list(GENERATORS) + ['patch'])

logger = logging.getLogger('tangled_fem')


def _guarded(action: Callable[[], int]) -> int:
    """Map library errors to exit codes."""
    try:
        return action()
    except Diverged as e:
        logger.error(f"{e}")
        return EXIT_DIVERGED
    except (ConfigError, MeshError, KeyError, ValueError) as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_USAGE
    except OSError as e:
        click.echo(f"I/O error: {e}", err=True)
        return EXIT_IO
    except TangledFEMError as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_USAGE


def _load(config_path: str) -> Dict[str, Any]:
    config = load_config(config_path)
    setup_logging(logs_directory=config['logging']['logs_directory'])
    return config


def _problem(config: Dict[str, Any]) -> Problem:
    validate_run_config(config)
    return build_problem(config['problem'], config.get('tangle'), config.get('material') or None,
                         config.get('probes') or None)


def _study_tangle(parsed: Dict[str, Any], default: str):
    """Studies compare tangled meshes, so an untangled run config falls back to the default kind."""
    tangle = parsed['tangle']
    return default if tangle.kind == 'none' else tangle


def snapshot_fields(disc: Discretization, u: np.ndarray) -> Dict[str, np.ndarray]:
    return {
        'displacement': u,
        'class': disc.report.codes(),
        'min_detJ': disc.min_corner_jacobian(),
        'det_Fbar': disc.centroid_det_f(u),
    }


def write_run_artifacts(config: Dict[str, Any], problem: Problem, solver: NewtonSolver,
                        result: RunResult, failure: str = None) -> Path:
    outputs = config['outputs']
    out_dir = Path(outputs['directory'])
    name = outputs.get('name', 'run')
    if outputs.get('vtk', True):
        for i, step in enumerate(result.steps):
            write_vtk(problem.mesh, snapshot_fields(solver.assembler.disc, step.u),
                      out_dir / f"{name}_step{i + 1:03d}.vtk")
    if outputs.get('csv', True):
        write_steps_csv(result, out_dir / f"{name}_steps.csv")
    if outputs.get('probe_log', True):
        ProbeLogger(config, name).log_run(result, failure)
    return out_dir


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Show DEBUG messages on the console.')
@click.pass_context
def cli(ctx, verbose):
    """Isoparametric tangled finite elements for 2-D hyperelasticity."""
    ctx.ensure_object(dict)
    ctx.obj['verbose'] = verbose


@cli.command('mesh')
@click.option('--preset', type=click.Choice(MESH_PRESETS), required=True, help='Benchmark geometry.')
@click.option('--n', 'n', type=int, default=2, show_default=True, help='Mesh index.')
@click.option('--tangle', default='none', show_default=True,
              help='none | single | checkerboard | pairwise | block_center | split_pair, optionally kind:magnitude.')
@click.option('--out', 'out', type=click.Path(dir_okay=False), default=None, help='Output mesh file.')
def mesh_cmd(preset, n, tangle, out):
    """Generate a preset mesh and print its tangle report."""
    def action():
        mesh = generate(preset, n, tangle)
        report = classify_mesh(mesh)
        path = Path(out or f"{preset}_n{n}.mesh")
        write_mesh(mesh, path)
        click.echo(json.dumps({'file': str(path), **mesh.summary(), **report.to_dict()}, indent=2))
        return EXIT_OK
    sys.exit(_guarded(action))


@cli.command('run')
@click.argument('config_path', type=click.Path())
@click.pass_context
def run_cmd(ctx, config_path):
    """Solve one run configuration and write VTK, CSV and probe-log artifacts."""
    def action():
        config = _load(config_path)
        if ctx.obj.get('verbose'):
            set_console_level('DEBUG')
        problem = _problem(config)
        cfg = validate_run_config(config)['solver']
        solver = NewtonSolver(problem.mesh, problem.material, problem.loadcase, cfg, probes=problem.probes)
        try:
            result = solver.run()
        except Diverged as e:
            if e.partial is not None:
                write_run_artifacts(config, problem, solver, e.partial, e.reason)
            raise
        out_dir = write_run_artifacts(config, problem, solver, result)
        click.echo(json.dumps({'artifacts': str(out_dir), **result.summary()}, indent=2, default=str))
        return EXIT_OK
    sys.exit(_guarded(action))


@cli.command('study')
@click.argument('config_path', type=click.Path())
def study_cmd(config_path):
    """Convergence study: one CSV per method with a fitted-slope footer."""
    def action():
        config = _load(config_path)
        parsed = validate_run_config(config)
        study = config.get('study', {})
        preset = config['problem'].get('preset')
        material = config.get('material') or None
        reference = None
        if study.get('reference_n') is not None:
            _, _, reference = reference_solution(preset, int(study['reference_n']), parsed['solver'], material)
        out_dir = Path(config['outputs']['directory'])
        written = []
        for method in study.get('methods', ['itfem_tangled']):
            table = convergence_study(
                preset, method, study.get('n_values', [1, 2, 3]), parsed['solver'],
                tangle=_study_tangle(parsed, 'checkerboard'), material=material, reference=reference,
                condition=bool(study.get('condition', False)),
            )
            written.append(str(write_table_csv(table, out_dir / f"{preset}_{method}.csv")))
            click.echo(f"{method}: slope {table.slope:.4f} ({len(table.successful)}/{len(table.rows)} rows)")
        click.echo(json.dumps({'tables': written}, indent=2))
        return EXIT_OK
    sys.exit(_guarded(action))


@cli.command('export')
@click.argument('mesh_path', type=click.Path())
@click.option('--displacement', type=click.Path(), default=None, help='CSV with node,ux,uy columns.')
@click.option('--out', 'out', type=click.Path(dir_okay=False), required=True, help='Output VTK file.')
def export_cmd(mesh_path, displacement, out):
    """Convert a mesh file, optionally with a displacement field, to legacy VTK."""
    def action():
        mesh = read_mesh(mesh_path)
        u = read_displacement_csv(displacement, mesh.n_nodes) if displacement else np.zeros(mesh.n_dofs)
        disc = Discretization(mesh)
        path = write_vtk(mesh, snapshot_fields(disc, u), out)
        click.echo(str(path))
        return EXIT_OK
    sys.exit(_guarded(action))


@cli.command('sweep')
@click.argument('config_path', type=click.Path())
def sweep_cmd(config_path):
    """Poisson-ratio or single-concave depth sweep to CSV."""
    def action():
        config = _load(config_path)
        parsed = validate_run_config(config)
        sweep = config.get('sweep', {})
        kind = sweep.get('kind', 'poisson')
        if kind == 'poisson':
            material = config.get('material') or {}
            rows = poisson_sweep(
                config['problem'].get('preset', 'punch'), int(sweep.get('n', 2)),
                sweep.get('values', [0.49, 0.495, 0.4995, 0.49995]),
                tangle=_study_tangle(parsed, 'block_center'), mu=float(material.get('mu', 500.0)),
                model=material.get('model', 'neo_hookean'), config=parsed['solver'],
            )
        elif kind == 'single':
            rows = single_concave_sweep(
                int(sweep.get('n', 3)), sweep.get('values', [0.15, 0.2, 0.25, 0.3]),
                int(sweep.get('reference_n', 5)), parsed['solver'], config.get('material') or None,
            )
        else:
            raise ConfigError(f"Unknown sweep kind '{kind}'; expected one of {sorted(SWEEP_COLUMNS)}")
        path = write_rows(rows, SWEEP_COLUMNS[kind], Path(config['outputs']['directory']) / f"sweep_{kind}.csv")
        click.echo(str(path))
        return EXIT_OK
    sys.exit(_guarded(action))


if __name__ == '__main__':
    cli(obj={})
