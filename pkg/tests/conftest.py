import numpy as np
import pytest

import cavelast as cv


@pytest.fixture(scope="session")
def density():
    return cv.BulkDensity(1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def iso():
    return cv.SurfaceDensity("isotropic")


@pytest.fixture(scope="session")
def ell():
    return cv.SurfaceDensity("elliptic", A=np.diag([4.0, 1.0]))


@pytest.fixture(scope="session")
def square_mesh():
    return cv.build_square_mesh(1.0, 0.25)


@pytest.fixture(scope="session")
def disk_mesh():
    # unit disk, one puncture at the origin; coarse enough for fast tests
    return cv.build_disk_mesh(1.0, 0.15, punctures=[((0.0, 0.0), 0.2)])


@pytest.fixture(scope="session")
def stretched_disk(disk_mesh):
    bc = cv.BoundaryData(kind="radial_stretch", lam=1.5)
    return bc.initial_field(disk_mesh)


@pytest.fixture(scope="session")
def radial_15(density, iso):
    return cv.solve_radial(1.5, density, iso, rho=0.2, M=96)


@pytest.fixture(scope="session")
def radial_15_ell(density, ell):
    return cv.solve_radial(1.5, density, ell, rho=0.2, M=96)


@pytest.fixture(scope="session")
def iso_run(tmp_path_factory):
    """Converged bundled isotropic scenario; (exit_code, artifact dir)."""
    from cavelast.cli import run_scenario
    out = tmp_path_factory.mktemp("iso_run")
    code, path = run_scenario("radial_iso_lambda1.5", out_dir=out, mode="run")
    return code, path


@pytest.fixture(scope="session")
def ell_run(tmp_path_factory):
    """Converged bundled elliptic scenario; (exit_code, artifact dir)."""
    from cavelast.cli import run_scenario
    out = tmp_path_factory.mktemp("ell_run")
    code, path = run_scenario("radial_ell_lambda1.5", out_dir=out, mode="run")
    return code, path
