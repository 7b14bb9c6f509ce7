"""Configuration module for mlnmf.

Configuration is read from one of these locations:
1. The path passed with the CLI's --config option
2. mlnmf.toml in the current working directory

The configuration is stored in TOML format. No environment variables are read.
"""

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import tomli

from .errors import InvalidArgumentError

__all__ = [
    "DEFAULT_CONFIG",
    "SolverSettings",
    "set_config_path",
    "get_config_path",
    "load_config",
    "get_logger_verbosity",
    "get_logger_path",
    "get_solver_settings",
    "get_bench_workers",
]

PROJECT_CONFIG_NAME = "mlnmf.toml"

# Default configuration values
DEFAULT_CONFIG: dict[str, Any] = {
    "logger": {
        "verbosity": "INFO",  # Default logging level
        "path": "",  # Empty means console only
    },
    "solvers": {
        "mu_floor": 1e-16,  # Floor for MU denominators
        "nnls_tol": 1e-10,  # KKT tolerance inside the active-set solver
        "nnls_ridge": 1e-12,  # Relative ridge for singular reduced systems
    },
    "bench": {
        "workers": 1,  # Worker threads for independent runs
    },
}

_explicit_config_path: Optional[Path] = None


def set_config_path(path: Optional[str]) -> None:
    """Pin the configuration file, as given by the --config option.

    Args:
        path: Path to a TOML file, or None to go back to the default lookup
    """
    global _explicit_config_path
    _explicit_config_path = Path(path) if path else None


def get_config_path() -> Optional[Path]:
    """Return the path to the config file in effect, if any.

    Checks the following locations in order:
    1. The path pinned with set_config_path()
    2. mlnmf.toml in the current working directory

    Returns:
        Path to the config file, or None when only defaults apply
    """
    if _explicit_config_path is not None:
        return _explicit_config_path

    path = Path.cwd() / PROJECT_CONFIG_NAME
    if path.exists():
        return path

    return None


def load_config() -> dict[str, Any]:
    """Load configuration from the config file.

    Returns:
        Dict containing the merged configuration (defaults + user config).

    Raises:
        InvalidArgumentError: If the file cannot be read or is not valid TOML
    """
    config = copy.deepcopy(DEFAULT_CONFIG)
    config_path = get_config_path()

    if config_path is not None:
        try:
            with open(config_path, "rb") as f:
                user_config = tomli.load(f)
        except (OSError, tomli.TOMLDecodeError) as e:
            raise InvalidArgumentError(
                f"Error loading config from {config_path}: {e}"
            ) from e

        # Merge user config with defaults
        _merge_configs(config, user_config)

    return config


def _merge_configs(base: dict[str, Any], override: dict[str, Any]) -> None:
    """Recursively merge override dict into base dict.

    Args:
        base: The base configuration dictionary to merge into.
        override: The override configuration dictionary to merge from.

    """
    for key, value in override.items():
        if key in base and isinstance(base[key], dict) and isinstance(value, dict):
            nested_value: dict[str, Any] = value
            _merge_configs(base[key], nested_value)
        else:
            base[key] = value


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs shared by the solvers."""

    mu_floor: float = 1e-16  # MU denominators are floored at this value
    nnls_tol: float = 1e-10  # KKT tolerance inside the active-set solver
    nnls_ridge: float = 1e-12  # Ridge, relative to trace(G)/r
    anls_steps: Optional[float] = None  # s(r) for ANLS work charges, 2r if unset


def get_logger_verbosity() -> str:
    """Get the configured logger verbosity level.

    Returns:
        String representing the logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).

    """
    config = load_config()
    return str(config["logger"]["verbosity"])


def get_logger_path() -> str:
    """Get the configured logger path.

    Returns:
        The directory where log files are written, or "" for console only.

    """
    config = load_config()
    return str(config["logger"]["path"])


def get_solver_settings() -> SolverSettings:
    """Get the configured solver settings.

    Returns:
        A SolverSettings with the floors and tolerances in effect.

    """
    solvers = load_config()["solvers"]
    return SolverSettings(
        mu_floor=float(solvers["mu_floor"]),
        nnls_tol=float(solvers["nnls_tol"]),
        nnls_ridge=float(solvers["nnls_ridge"]),
    )


def get_bench_workers() -> int:
    """Get the number of worker threads for benchmark runs."""
    workers = int(load_config()["bench"]["workers"])
    if workers < 1:
        raise InvalidArgumentError(f"bench.workers must be >= 1, got {workers}")
    return workers
