"""Sweep the boundary stretch and watch the cavity open.

The 1-D radial solver is cheap enough to trace the whole branch: below a
critical stretch the optimal hole radius collapses to grid scale, above it
a macroscopic cavity appears. With the elliptic surface density the branch
point moves to a larger stretch, because anisotropic surface area is more
expensive to create.
"""

import numpy as np

import cavelast as cv

density = cv.BulkDensity(mu=1.0, a=1.0, b=1.0)
iso = cv.SurfaceDensity("isotropic")
ell = cv.SurfaceDensity("elliptic", A=np.diag([4.0, 1.0]))

lams = [round(1.0 + 0.1 * k, 1) for k in range(9)]
rows_iso = cv.sweep_lambda(lams, density, iso, rho=0.2, M=64)
rows_ell = cv.sweep_lambda(lams, density, ell, rho=0.2, M=64)

print("lambda   cavity radius (iso)   cavity radius (elliptic)")
for ri, re in zip(rows_iso, rows_ell):
    mark_i = "open" if ri["cavity_radius"] > 0.01 else "closed"
    mark_e = "open" if re["cavity_radius"] > 0.01 else "closed"
    print(f"{ri['lambda']:6.2f}   {ri['cavity_radius']:10.6f} {mark_i:>8}"
          f"   {re['cavity_radius']:10.6f} {mark_e:>8}")

opened_iso = min(r["lambda"] for r in rows_iso if r["cavity_radius"] > 0.01)
opened_ell = min(r["lambda"] for r in rows_ell if r["cavity_radius"] > 0.01)
print(f"\nfirst open stretch, isotropic: {opened_iso}")
print(f"first open stretch, elliptic:  {opened_ell}")
print("anisotropy delays cavitation" if opened_ell > opened_iso else "")
