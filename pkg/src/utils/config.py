"""
Configuration management utilities.
"""

import copy
import os
import yaml
from pathlib import Path
from typing import Dict, Any, Optional

from utils.errors import ConfigError

DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), "../../config/config.yaml")

REQUIRED_SECTIONS = ['problem', 'tangle', 'material', 'solver', 'outputs', 'logging']

THREADS_ENV = 'TFEM_THREADS'

# sections a run file replaces as a whole instead of overlaying
REPLACED_SECTIONS = {'material', 'probes'}


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load a run configuration from YAML.

    Files other than the default are overlaid on the default configuration,
    so a run file only needs the sections it changes.

    Args:
        config_path: Path to config file. If None, uses default.

    Returns:
        Configuration dictionary

    Raises:
        FileNotFoundError: If config file doesn't exist
        yaml.YAMLError: If config file is invalid
        ValueError: If a required section is missing
    """
    if config_path is None:
        config_path = DEFAULT_CONFIG_PATH

    config_path = Path(config_path).resolve()

    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    try:
        with open(config_path, 'r') as f:
            config = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise yaml.YAMLError(f"Invalid YAML configuration in {config_path}: {e}")

    if not isinstance(config, dict):
        raise ValueError(f"Configuration root must be a mapping: {config_path}")

    default_path = Path(DEFAULT_CONFIG_PATH).resolve()
    if config_path != default_path and default_path.exists():
        with open(default_path, 'r') as f:
            defaults = yaml.safe_load(f) or {}
        for section in REPLACED_SECTIONS & set(config):
            defaults.pop(section, None)
        config = _merge(defaults, config)

    for section in REQUIRED_SECTIONS:
        if section not in config:
            raise ValueError(f"Missing required config section: {section}")

    config = _apply_defaults(config)
    config = _resolve_paths(config)
    return config


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict overlay; non-dict values replace."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _apply_defaults(config: Dict[str, Any]) -> Dict[str, Any]:
    """Apply default values and create output directories."""
    config.setdefault('probes', {})
    config.setdefault('study', {})
    outputs = config['outputs']
    outputs.setdefault('directory', 'results')
    outputs.setdefault('vtk', True)
    outputs.setdefault('csv', True)
    outputs.setdefault('probe_log', True)
    config['logging'].setdefault('logs_directory', 'logs')

    Path(outputs['directory']).mkdir(parents=True, exist_ok=True)
    Path(config['logging']['logs_directory']).mkdir(parents=True, exist_ok=True)
    return config


def _resolve_paths(config: Dict[str, Any]) -> Dict[str, Any]:
    """Resolve relative paths in configuration."""
    for section, key in (('outputs', 'directory'), ('logging', 'logs_directory'), ('problem', 'mesh_path')):
        value = config.get(section, {}).get(key)
        if value and not os.path.isabs(value):
            config[section][key] = os.path.abspath(value)
    return config


def dump_config(config: Dict[str, Any], path: Optional[str] = None) -> str:
    """Serialize a configuration; writes it to `path` when given."""
    text = yaml.safe_dump(config, sort_keys=True, default_flow_style=False)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def validate_run_config(config: Dict[str, Any]) -> Dict[str, Any]:
    """
    Check presets, tangle, material and solver options before any run.

    Returns:
        The parsed TangleSpec, material model (None for the preset default) and SolverConfig

    Raises:
        ConfigError: listing the accepted values
    """
    from core.material import build_material
    from mesh.generators import TangleSpec
    from problems.presets import PRESETS
    from solver.newton import SolverConfig
    from analysis.convergence import STUDY_METHODS

    problem = config.get('problem', {})
    if not problem.get('mesh_path'):
        preset = problem.get('preset')
        if preset not in PRESETS:
            raise ConfigError(f"Unknown preset '{preset}'; expected one of {sorted(PRESETS)}")
        if not isinstance(problem.get('n', 1), int):
            raise ConfigError(f"problem.n must be an integer, got {problem.get('n')!r}")

    tangle = TangleSpec.parse(config.get('tangle'))
    material = None
    if config.get('material'):
        try:
            material = build_material(config['material'])
        except (ValueError, TypeError) as e:
            raise ConfigError(f"Invalid material: {e}")
    solver = SolverConfig.from_dict(config.get('solver'))

    study = config.get('study') or {}
    unknown = [m for m in study.get('methods', []) if m not in STUDY_METHODS]
    if unknown:
        raise ConfigError(f"Unknown study methods {unknown}; expected one of {list(STUDY_METHODS)}")
    for n in study.get('n_values', []):
        if not isinstance(n, int) or n < 0:
            raise ConfigError(f"study.n_values must be non-negative integers, got {n!r}")

    return {'tangle': tangle, 'material': material, 'solver': solver}


def thread_count() -> int:
    """Worker count for study rows from TFEM_THREADS (default 1)."""
    value = os.environ.get(THREADS_ENV, '1')
    try:
        count = int(value)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {value!r}")
    return max(1, count)
