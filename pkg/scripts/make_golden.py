"""Regenerate the golden radial sweep files.

Run from the repository root:

    python3 scripts/make_golden.py

Writes lambda sweeps for the isotropic and the elliptic surface density into
src/cavelast/golden/v1/. Committed outputs are the regression baseline; only
regenerate on purpose (solver changes that shift energies beyond the 3% band
should bump the version directory instead of overwriting v1).
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import cavelast as cv  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "cavelast" / "golden" / "v1"
LAMBDAS = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8]
RHO = 0.2
M = 96


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    density = cv.BulkDensity(1.0, 1.0, 1.0)
    for name, phi in (
        ("radial_iso", cv.SurfaceDensity("isotropic")),
        ("radial_ell", cv.SurfaceDensity("elliptic", A=np.diag([4.0, 1.0]))),
    ):
        rows = cv.sweep_lambda(LAMBDAS, density, phi, RHO, M=M)
        bad = [r for r in rows if r["status"] != "converged"]
        if bad:
            raise SystemExit(f"{name}: unconverged rows {[r['lambda'] for r in bad]}")
        path = OUT / f"{name}.csv"
        cv.sweep_to_csv(rows, path)
        print(f"wrote {path}")
        for r in rows:
            print(f"  lambda={r['lambda']:.1f} c={r['cavity_radius']:.6f} "
                  f"total={r['total']:.6f}")


if __name__ == "__main__":
    main()
