import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from latentshield import _gamma_py, _kernels

compiled = pytest.importorskip("latentshield._gamma_ext", reason="compiled extension not built")


def test_backend_selected():
    expected = "python" if os.environ.get("LATENTSHIELD_PURE_PYTHON", "") not in ("", "0") else "compiled"
    assert _kernels.BACKEND == expected


def test_env_forces_python_backend():
    out = subprocess.run([sys.executable, "-c", "import latentshield; print(latentshield.BACKEND)"],
                         env={**os.environ, "LATENTSHIELD_PURE_PYTHON": "1"}, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("a", [1.0, 2.0, 3.0, 10.0, 20.0, 75.0])
def test_scalar_parity(a):
    ps = np.r_[1e-12, np.linspace(0.001, 0.999, 101), 1 - 1e-12]
    for p in ps:
        r_c, r_p = compiled.gamma_p_inv(a, p), _gamma_py.gamma_p_inv(a, p)
        assert abs(r_c - r_p) <= 1e-12 * max(1.0, r_c)
    for x in np.geomspace(1e-4, 10 * a, 60):
        assert abs(compiled.gamma_p(a, x) - _gamma_py.gamma_p(a, x)) < 1e-14
    assert abs(compiled.log_gamma(a) - _gamma_py.log_gamma(a)) < 1e-13


def test_array_parity():
    p = np.random.default_rng(0).uniform(1e-10, 1 - 1e-10, 2000)
    for a in (1.0, 20.0):
        c = compiled.gamma_p_inv_array(a, p)
        py = _gamma_py.gamma_p_inv_array(a, p)
        assert np.max(np.abs(c - py) / np.maximum(1.0, c)) < 1e-12
        x = c
        assert np.max(np.abs(compiled.gamma_p_array(a, x) - _gamma_py.gamma_p_array(a, x))) < 1e-14


def test_kernels_module_reload_respects_env(monkeypatch):
    monkeypatch.setenv("LATENTSHIELD_PURE_PYTHON", "1")
    mod = importlib.reload(_kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("LATENTSHIELD_PURE_PYTHON")
        importlib.reload(_kernels)
