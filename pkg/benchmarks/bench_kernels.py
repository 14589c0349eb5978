"""Time the compiled and pure-Python special-function kernels side by side.

    python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import importlib
import timeit

import numpy as np


def _backends():
    found = {"python": importlib.import_module("latentshield._gamma_py")}
    try:
        found["compiled"] = importlib.import_module("latentshield._gamma_ext")
    except ImportError:
        print("compiled extension not built; timing the Python backend only")
    return found


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    p = rng.uniform(1e-9, 1 - 1e-9, args.n)
    x = rng.gamma(20.0, 1.0, args.n)
    cases = {
        "gamma_p_inv scalar loop (k=20)": lambda m: [m.gamma_p_inv(20.0, float(v)) for v in p],
        "gamma_p_inv_array (k=20)": lambda m: m.gamma_p_inv_array(20.0, p),
        "gamma_p_array (k=20)": lambda m: m.gamma_p_array(20.0, x),
        "log_gamma scalar loop": lambda m: [m.log_gamma(float(v)) for v in x],
    }
    mods = _backends()
    print(f"{'kernel':<34}" + "".join(f"{name:>14}" for name in mods) + f"{'speedup':>10}")
    for label, fn in cases.items():
        times = {name: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for name, m in mods.items()}
        row = f"{label:<34}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times.values())
        if "compiled" in times:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
