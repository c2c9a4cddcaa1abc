#!/usr/bin/env python3
"""
Runtime Settings
Solver, capacity and concurrency defaults loaded from config/defaults.yaml,
with UNIEST_* environment variables taking precedence
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).parent / "config" / "defaults.yaml"

# YAML section each field lives under
_SECTIONS = {
    "tol": "solver",
    "max_iterations": "solver",
    "krylov_dim": "solver",
    "restart_keep": "solver",
    "dense_cap": "solver",
    "max_dim": "lattice",
    "recursion_cap": "kahn",
    "mc_batch_size": "kahn",
    "threads": "runtime",
}


class SolverSettings(BaseModel):
    """Tunables shared by every numerical module"""
    tol: float = Field(default=1e-10, gt=0.0, description="Relative residual for eigensolves")
    max_iterations: int = Field(default=50000, ge=1, description="Matvec budget per eigensolve")
    krylov_dim: int = Field(default=120, ge=4, description="Lanczos basis size before restart")
    restart_keep: int = Field(default=40, ge=1, description="Ritz vectors kept on restart")
    dense_cap: int = Field(default=3000, ge=1, description="Largest dimension for dense eigensolves")
    max_dim: int = Field(default=200000, ge=1, description="Largest Young lattice to enumerate")
    recursion_cap: int = Field(default=50, ge=2, description="Largest d for the exact Kahn recursions")
    mc_batch_size: int = Field(default=200000, ge=1, description="Samples per Monte-Carlo batch")
    threads: Optional[int] = Field(default=None, ge=1, description="Worker threads (None = cpu count)")

    def worker_count(self) -> int:
        return self.threads or os.cpu_count() or 1


def _read_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        logger.warning(f"Settings file not found at {path}, using built-in defaults")
        return {}
    with open(path, "r") as f:
        raw = yaml.safe_load(f) or {}
    values = {}
    for name, section in _SECTIONS.items():
        block = raw.get(section) or {}
        if name in block:
            values[name] = block[name]
    return values


def _read_env() -> Dict[str, str]:
    values = {}
    for name in _SECTIONS:
        env_value = os.getenv(f"UNIEST_{name.upper()}")
        if env_value is not None and env_value != "":
            values[name] = env_value
    return values


def load_settings(path: Optional[Path] = None, **overrides: Any) -> SolverSettings:
    """
    Build settings from YAML defaults, environment and explicit overrides
    (later sources win)
    """
    values = _read_yaml(Path(path) if path else DEFAULTS_PATH)
    values.update(_read_env())
    values.update({k: v for k, v in overrides.items() if v is not None})
    settings = SolverSettings(**values)
    logger.debug(f"Loaded settings: {settings.model_dump()}")
    return settings


_settings: Optional[SolverSettings] = None


def get_settings() -> SolverSettings:
    """Process-wide settings, loaded on first use"""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def set_settings(settings: Optional[SolverSettings]) -> None:
    """Replace (or with None, reset) the process-wide settings"""
    global _settings
    _settings = settings


def resolve(settings: Optional[SolverSettings]) -> SolverSettings:
    return settings if settings is not None else get_settings()
