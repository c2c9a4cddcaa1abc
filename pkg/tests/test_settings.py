#!/usr/bin/env python3
"""
Tests for settings loading: YAML defaults, UNIEST_* environment and overrides
"""

import shutil
import sys
import tempfile
from pathlib import Path

import pytest
from pydantic import ValidationError

sys.path.append(str(Path(__file__).parent.parent))

import settings as settings_module
from settings import SolverSettings, get_settings, load_settings, resolve, set_settings


class TestLoadSettings:
    """Precedence of the configuration sources"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()
        self.temp_path = Path(self.temp_dir)

    def teardown_method(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)
        set_settings(None)

    def test_shipped_defaults(self, monkeypatch):
        for name in ("TOL", "MAX_DIM", "THREADS"):
            monkeypatch.delenv(f"UNIEST_{name}", raising=False)
        loaded = load_settings()
        assert loaded.tol == 1e-10
        assert loaded.max_dim == 200000
        assert loaded.dense_cap == 3000
        assert loaded.threads is None

    def test_yaml_file(self):
        path = self.temp_path / "solver.yaml"
        path.write_text("solver:\n  tol: 1.0e-8\nlattice:\n  max_dim: 500\n")
        loaded = load_settings(path)
        assert loaded.tol == 1e-8
        assert loaded.max_dim == 500
        assert loaded.krylov_dim == SolverSettings().krylov_dim

    def test_missing_file_uses_builtin(self):
        loaded = load_settings(self.temp_path / "missing.yaml")
        assert loaded == SolverSettings()

    def test_environment_beats_yaml(self, monkeypatch):
        path = self.temp_path / "solver.yaml"
        path.write_text("lattice:\n  max_dim: 500\n")
        monkeypatch.setenv("UNIEST_MAX_DIM", "700")
        assert load_settings(path).max_dim == 700

    def test_override_beats_environment(self, monkeypatch):
        monkeypatch.setenv("UNIEST_THREADS", "3")
        assert load_settings(threads=5).threads == 5
        assert load_settings(threads=None).threads == 3

    def test_invalid_value(self, monkeypatch):
        monkeypatch.setenv("UNIEST_TOL", "-1")
        with pytest.raises(ValidationError):
            load_settings()

    def test_worker_count(self):
        assert SolverSettings(threads=7).worker_count() == 7
        assert SolverSettings().worker_count() >= 1


class TestProcessSettings:
    """Process-wide settings"""

    def teardown_method(self):
        set_settings(None)

    def test_set_and_resolve(self):
        custom = SolverSettings(max_dim=42)
        set_settings(custom)
        assert get_settings() is custom
        assert resolve(None) is custom
        other = SolverSettings(max_dim=7)
        assert resolve(other) is other

    def test_reset_reloads(self):
        set_settings(SolverSettings(max_dim=42))
        set_settings(None)
        assert settings_module._settings is None
        assert isinstance(get_settings(), SolverSettings)
