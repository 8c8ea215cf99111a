"""Smoke test for the pyxorq extension.

Build first with `cargo build -p xorq-py --release` (or without --release);
the script loads target/{release,debug}/libpyxorq.so, or the path in PYXORQ_LIB.
"""

import importlib.machinery
import importlib.util
import json
import math
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    candidates = [os.environ.get("PYXORQ_LIB")] if os.environ.get("PYXORQ_LIB") else [
        ROOT / "target" / "release" / "libpyxorq.so",
        ROOT / "target" / "debug" / "libpyxorq.so",
    ]
    for path in map(Path, candidates):
        if path.exists():
            loader = importlib.machinery.ExtensionFileLoader("pyxorq", str(path))
            spec = importlib.util.spec_from_file_location("pyxorq", str(path), loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("libpyxorq.so not found; run `cargo build -p xorq-py` first")


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    x = load()

    chsh = x.Game.chsh()
    assert chsh.is_classical and chsh.n == 2
    close(x.beta_sdp(chsh).value, math.sqrt(0.5), 1e-4)
    value, strategy = x.omega_lower(chsh, restarts=10)
    close(value, 0.5, 1e-6)
    close(x.bias(chsh, strategy), value, 1e-9)

    t2 = x.Game.t(2)
    close(t2.trace_norm, 1.0, 1e-8)
    nc = x.beta_nc(t2)
    close(nc.value, math.sqrt(0.5), 1e-4)
    objective, violation = nc.check(t2)
    close(objective, nc.value, 1e-6)
    assert violation <= 1e-6
    close(x.beta_os(t2).value, 1.0, 1e-3)
    close(x.bias(t2, x.Strategy.t_entangled(2, 3)), 2.0 / 3.0, 1e-8)

    h1 = x.Game.h(1)
    close(x.bias(h1, x.Strategy.h1_me()), 5.0 / 9.0, 1e-9)
    close(x.bias(h1, x.Strategy.h1_unentangled()), 0.4, 1e-12)
    assert x.h_n_closed_forms(2) == ((2, 7), (10, 21))

    report = json.loads(x.report(h1, name="h1", restarts=10, me_dims=[3]))
    assert report["format"] == "xorq-report-v1"
    assert all(c["pass"] or not c["hard"] for c in report["chains"])
    close(report["beta_nc"], 0.6, 1e-4)

    again = x.Game.from_json(t2.to_json())
    assert again.to_json() == t2.to_json()
    re, im = again.matrix()
    assert len(re) == again.n ** 2 and len(im[0]) == again.n ** 2

    try:
        x.Game.from_matrix(1, [[2.0]])
    except ValueError:
        pass
    else:
        raise AssertionError("trace norm 2 accepted")

    print("pyxorq smoke test passed")


if __name__ == "__main__":
    main()
