import numpy as np
import pytest

import cavelast as cv
from cavelast.exceptions import DomainError, InfeasibleEnergyError
from cavelast.variation import ConstantField


class RotationField:
    """psi(xi) = J (xi - c) with J the rotation generator."""

    J = np.array([[0.0, -1.0], [1.0, 0.0]])

    def __init__(self, center=(0.0, 0.0)):
        self.center = np.asarray(center, dtype=float)

    def value(self, xi):
        return (np.atleast_2d(xi) - self.center) @ self.J.T

    def jacobian(self, xi):
        return np.broadcast_to(self.J, (len(np.atleast_2d(xi)), 2, 2)).copy()

    def grad_bound(self):
        return 1.0


@pytest.fixture(scope="module")
def lifted(disk_mesh, radial_15):
    return cv.radial_lift(radial_15, disk_mesh)


class TestFields:
    def test_bump_support_and_peak(self):
        psi = cv.BumpField((0.2, 0.1), 0.5, (3.0, 4.0))
        v = psi.value(np.array([[0.2, 0.1], [1.5, 1.5]]))
        assert np.allclose(v[0], [0.6, 0.8])
        assert np.allclose(v[1], 0.0)

    def test_bump_grad_bound_is_sharp(self):
        psi = cv.BumpField((0.0, 0.0), 0.7, (1.0, 0.0))
        t = np.linspace(-0.699, 0.699, 2001)
        pts = np.stack([t, np.zeros_like(t)], axis=1)
        J = psi.jacobian(pts)
        observed = np.abs(J).max()
        assert observed <= psi.grad_bound() + 1e-9
        assert observed >= 0.99 * psi.grad_bound()

    def test_bump_validation(self):
        with pytest.raises(ValueError):
            cv.BumpField((0, 0), 0.5, (0.0, 0.0))
        with pytest.raises(ValueError):
            cv.BumpField((0, 0), -0.1, (1.0, 0.0))

    def test_hat_is_one_at_its_node(self, disk_mesh):
        y = cv.DeformationField(disk_mesh)
        interior = np.setdiff1d(np.arange(len(disk_mesh.vertices)),
                                disk_mesh.boundary_vertices)
        node = int(interior[0])
        psi = cv.HatField(y, node, (0.0, 2.0))
        at_node = psi.value(y.positions[node][None])[0]
        assert np.allclose(at_node, [0.0, 1.0], atol=1e-9)
        others = y.positions[interior[5:8]]
        assert np.allclose(psi.value(others), 0.0, atol=1e-9)
        assert psi.grad_bound() > 0.0

    def test_dilation_and_constant(self):
        d = cv.DilationField((1.0, -1.0))
        pts = np.array([[2.0, 0.0]])
        assert np.allclose(d.value(pts), [[1.0, 1.0]])
        assert np.allclose(d.jacobian(pts), np.eye(2)[None])
        c = ConstantField((0.3, 0.4))
        assert np.allclose(c.value(pts), [[0.3, 0.4]])
        assert np.allclose(c.jacobian(pts), 0.0)
        assert c.grad_bound() == 0.0

    def test_field_vanishes_on(self, disk_mesh):
        y = cv.DeformationField(disk_mesh)
        gam = cv.gamma_images(y)
        assert len(gam) == len(disk_mesh.vertex_ids("dirichlet"))
        inner = cv.BumpField((0.0, 0.4), 0.3, (1.0, 0.0))
        assert cv.field_vanishes_on(inner, gam)
        wide = cv.BumpField((0.0, 0.4), 2.0, (1.0, 0.0))
        assert not cv.field_vanishes_on(wide, gam)


class TestOuterCompose:
    def test_zero_t_is_same_object(self, lifted):
        assert cv.outer_compose(lifted, cv.DilationField(), 0.0) is lifted

    def test_translation_moves_everything(self, lifted):
        psi = ConstantField((0.5, -0.25))
        y2 = cv.outer_compose(lifted, psi, 0.1)
        assert np.allclose(y2.positions, lifted.positions + [0.05, -0.025],
                           atol=1e-14)

    def test_step_bound_enforced(self, lifted):
        psi = cv.BumpField((0.0, 0.0), 0.5, (1.0, 0.0))
        tmax = 1.0 / psi.grad_bound()
        with pytest.raises(DomainError):
            cv.outer_compose(lifted, psi, 1.01 * tmax)
        y2 = cv.outer_compose(lifted, psi, 0.5 * tmax)
        assert cv.min_det(y2) > 0.0

    def test_cavity_count_preserved(self, lifted, iso):
        psi = cv.BumpField((1.1, 0.0), 0.4, (0.3, 1.0))
        y2 = cv.outer_compose(lifted, psi, 0.2 / psi.grad_bound())
        assert len(cv.detect_cavities(y2, iso)) == len(cv.detect_cavities(lifted, iso))


class TestElasticVariation:
    def test_identity_interior_field_is_stationary(self, square_mesh, density):
        y = cv.DeformationField(square_mesh)
        interior = np.setdiff1d(np.arange(len(square_mesh.vertices)),
                                square_mesh.boundary_vertices)
        psi = cv.HatField(y, int(interior[0]), (1.0, 0.0))
        # DW(I) = 2I, so the variation is 2 int div psi = 0
        assert abs(cv.elastic_first_variation(y, psi, density)) <= 1e-12
        assert abs(cv.elastic_first_variation(y, psi, density,
                                              mode="centroid")) <= 1e-6

    def test_modes_agree_for_affine_psi(self, lifted, density):
        psi = cv.DilationField((0.2, 0.1))
        a = cv.elastic_first_variation(lifted, psi, density, mode="interp")
        b = cv.elastic_first_variation(lifted, psi, density, mode="centroid")
        assert a == pytest.approx(b, rel=1e-12)

    def test_rotation_field_is_zero(self, lifted, density):
        # DW(F) F^T is symmetric, the rotation generator antisymmetric
        psi = RotationField()
        val = cv.elastic_first_variation(lifted, psi, density, mode="centroid")
        assert abs(val) <= 1e-10 * 20.0

    def test_unknown_mode(self, lifted, density):
        with pytest.raises(ValueError):
            cv.elastic_first_variation(lifted, cv.DilationField(), density,
                                       mode="edgewise")

    def test_infeasible_raises(self, square_mesh, density):
        pos = square_mesh.vertices.copy()
        interior = np.setdiff1d(np.arange(len(pos)), square_mesh.boundary_vertices)
        tris = square_mesh.triangles
        v = int(interior[0])
        t = int(np.nonzero((tris == v).any(axis=1))[0][0])
        other = [i for i in tris[t] if i != v][0]
        pos[v] = pos[other]
        y = cv.DeformationField(square_mesh, pos)
        with pytest.raises(InfeasibleEnergyError):
            cv.elastic_first_variation(y, cv.DilationField(), density)


class TestTangentialDivergence:
    def test_dilation_identity_any_phi(self, iso, ell):
        psi = cv.DilationField()
        for phi in (iso, ell):
            for th in np.linspace(0.0, 2 * np.pi, 7):
                nu = np.array([np.cos(th), np.sin(th)])
                div = cv.anisotropic_tangential_divergence(psi, nu, (0.5, 0.2), phi)
                assert div == pytest.approx(1.0, abs=1e-12)

    def test_constant_field_gives_zero(self, ell):
        psi = ConstantField((2.0, -1.0))
        div = cv.anisotropic_tangential_divergence(psi, (1.0, 0.0), (0.0, 0.0), ell)
        assert div == pytest.approx(0.0, abs=1e-14)

    def test_rotation_isotropic_gives_zero(self, iso):
        psi = RotationField()
        nu = np.array([0.6, 0.8])
        div = cv.anisotropic_tangential_divergence(psi, nu, (1.0, 1.0), iso)
        assert div == pytest.approx(0.0, abs=1e-12)

    def test_unit_normal_required(self, iso):
        with pytest.raises(ValueError):
            cv.anisotropic_tangential_divergence(cv.DilationField(), (1.0, 1.0),
                                                 (0.0, 0.0), iso)


class TestSurfaceVariation:
    def test_dilation_equals_perimeter(self, lifted, iso, ell):
        for phi in (iso, ell):
            recs = cv.detect_cavities(lifted, phi)
            center = recs[0].boundary.mean(axis=0)
            psi = cv.DilationField(center)
            per = cv.anisotropic_perimeter(recs[0].boundary, phi)
            for mode in ("vertex", "midpoint"):
                val = cv.surface_first_variation(lifted, psi, phi,
                                                 cavities=recs, mode=mode)
                assert val == pytest.approx(per, rel=1e-12), (phi.kind, mode)

    def test_dilation_close_to_circle_perimeter(self, lifted, iso):
        recs = cv.detect_cavities(lifted, iso)
        c = recs[0].radius_mean()
        psi = cv.DilationField(recs[0].boundary.mean(axis=0))
        val = cv.surface_first_variation(lifted, psi, iso, cavities=recs)
        assert val == pytest.approx(2 * np.pi * c, rel=0.01)

    def test_rotation_isotropic_zero(self, lifted, iso):
        recs = cv.detect_cavities(lifted, iso)
        psi = RotationField(recs[0].boundary.mean(axis=0))
        val = cv.surface_first_variation(lifted, psi, iso, cavities=recs)
        assert abs(val) <= 1e-10

    def test_vertex_mode_is_exact_derivative(self, lifted, ell):
        recs = cv.detect_cavities(lifted, ell)
        psi = cv.BumpField((0.9, 0.3), 0.6, (0.7, -0.4))
        val = cv.surface_first_variation(lifted, psi, ell, cavities=recs)
        t = 1e-6
        pers = []
        for s in (t, -t):
            moved = recs[0].boundary + s * psi.value(recs[0].boundary)
            pers.append(cv.anisotropic_perimeter(moved, ell))
        fd = (pers[0] - pers[1]) / (2 * t)
        assert val == pytest.approx(fd, rel=1e-6)

    def test_modes_agree_on_smooth_field(self, lifted, ell):
        recs = cv.detect_cavities(lifted, ell)
        psi = cv.BumpField((0.0, 0.0), 2.5, (0.3, 0.9))
        a = cv.surface_first_variation(lifted, psi, ell, cavities=recs, mode="vertex")
        b = cv.surface_first_variation(lifted, psi, ell, cavities=recs, mode="midpoint")
        assert a == pytest.approx(b, rel=0.05)

    def test_unknown_mode(self, lifted, iso):
        with pytest.raises(ValueError):
            cv.surface_first_variation(lifted, cv.DilationField(), iso,
                                       mode="simpson")


class TestResidualReport:
    def test_analytic_matches_fd(self, lifted, density, iso, ell):
        rng = np.random.default_rng(12)
        for phi in (iso, ell):
            for _ in range(5):
                ang = rng.uniform(0, 2 * np.pi)
                c = lifted.positions[rng.integers(0, len(lifted.positions))]
                psi = cv.BumpField(c, rng.uniform(0.2, 0.6),
                                   (np.cos(ang), np.sin(ang)))
                rep = cv.first_variation_residual(lifted, psi, density, phi)
                assert rep.total == rep.elastic + rep.surface
                assert rep.fd_gap <= 1e-3

    def test_zero_field(self, lifted, density, iso):
        rep = cv.first_variation_residual(lifted, ConstantField((0.0, 0.0)),
                                          density, iso)
        assert rep.elastic == 0.0
        assert rep.surface == 0.0
        assert abs(rep.fd_value) <= 1e-9

    def test_as_text(self, lifted, density, iso):
        rep = cv.first_variation_residual(lifted, cv.DilationField(), density, iso)
        text = rep.as_text()
        for key in ("elastic_variation =", "surface_variation =",
                    "total_variation =", "fd_value =", "fd_gap ="):
            assert key in text


class TestBattery:
    def test_sizes_and_supports(self, lifted):
        fields = cv.certification_battery(lifted)
        assert len(fields) == 16 + 8
        gam = cv.gamma_images(lifted)
        for psi in fields:
            assert cv.field_vanishes_on(psi, gam)

    def test_custom_counts(self, lifted):
        fields = cv.certification_battery(lifted, per_cavity=4, n_global=2)
        assert len(fields) == 6

    def test_translation_and_rotation_residual_vanish(self, lifted, density, iso):
        res = cv.battery_residual(lifted, density, iso,
                                  fields=[ConstantField((1.0, 2.0))])
        assert res <= 1e-10
        res = cv.battery_residual(lifted, density, iso,
                                  fields=[RotationField()])
        assert res <= 1e-9

    def test_default_battery_residual_finite(self, lifted, density, iso):
        res = cv.battery_residual(lifted, density, iso)
        assert 0.0 <= res < 5.0


class TestMinimize:
    def test_identity_data_stays_identity(self, density, iso):
        mesh = cv.build_disk_mesh(1.0, 0.06)
        y0 = cv.DeformationField(mesh)
        y1, log = cv.minimize(y0, density, iso, max_iters=50)
        assert log.status == "converged"
        assert np.abs(y1.positions - mesh.vertices).max() <= 1e-8
        # agreement with the 1-D minimizer at lambda = 1 (vanishing puncture)
        e2d = log.records[-1]["energy"]
        prof = cv.solve_radial(1.0, density, iso, rho=0.01, M=64)
        bulk, surf = cv.radial_energy_breakdown(prof, density, iso)
        e1d = bulk + surf - 2 * np.pi * 0.01 * prof.values[0]  # strip the rho artifact
        assert abs(e2d - e1d) <= 1e-3 * abs(e1d)

    def test_noisy_square_relaxes_back(self, square_mesh, density, iso):
        rng = np.random.default_rng(1)
        pos = square_mesh.vertices.copy()
        interior = np.setdiff1d(np.arange(len(pos)), square_mesh.boundary_vertices)
        pos[interior] += 0.02 * rng.standard_normal((len(interior), 2))
        y1, log = cv.minimize(cv.DeformationField(square_mesh, pos), density, iso,
                              max_iters=400)
        assert log.status == "converged"
        E = [r["energy"] for r in log.records]
        assert all(b <= a + 1e-14 for a, b in zip(E, E[1:]))
        assert E[-1] == pytest.approx(2.0, abs=1e-6)
        assert np.abs(y1.positions - square_mesh.vertices).max() <= 1e-3
        final_res = log.records[-1]["residual"]
        assert final_res is not None and final_res <= 1e-3 * E[-1]

    def test_cavity_opens_under_stretch(self, density, iso):
        mesh = cv.build_disk_mesh(1.0, 0.25, punctures=[((0.0, 0.0), 0.2)])
        y0 = cv.BoundaryData(kind="radial_stretch", lam=1.5).initial_field(mesh)
        e_seed = cv.total_energy(y0, density, iso).total
        y1, log = cv.minimize(y0, density, iso, max_iters=150)
        ring = np.linalg.norm(y1.positions[mesh.puncture_loops()[0]], axis=1)
        assert ring.mean() > 0.7
        assert log.records[-1]["energy"] < e_seed - 2.0
        assert all(r["min_det"] > 1e-8 for r in log.records)
        rep = cv.check_inv(y1, samples=150, seed=0)
        assert rep.passed

    def test_infeasible_start_rejected(self, square_mesh, density, iso):
        pos = square_mesh.vertices.copy()
        interior = np.setdiff1d(np.arange(len(pos)), square_mesh.boundary_vertices)
        tris = square_mesh.triangles
        v = int(interior[0])
        t = int(np.nonzero((tris == v).any(axis=1))[0][0])
        other = [i for i in tris[t] if i != v][0]
        pos[v] = pos[other]
        with pytest.raises(InfeasibleEnergyError):
            cv.minimize(cv.DeformationField(square_mesh, pos), density, iso)

    def test_stall_reported(self, square_mesh, density, iso):
        rng = np.random.default_rng(4)
        pos = square_mesh.vertices.copy()
        interior = np.setdiff1d(np.arange(len(pos)), square_mesh.boundary_vertices)
        pos[interior] += 0.02 * rng.standard_normal((len(interior), 2))
        _, log = cv.minimize(cv.DeformationField(square_mesh, pos), density, iso,
                             max_iters=50, max_backtracks=0)
        assert log.status == "stalled"

    def test_log_csv(self, tmp_path):
        log = cv.IterationLog()
        log.add(iter=0, energy=2.0, bulk=2.0, surface=0.0, min_det=1.0,
                step=0.0, residual=None)
        log.add(iter=1, energy=1.5, bulk=1.2, surface=0.3, min_det=0.9,
                step=0.25, residual=0.01)
        p = tmp_path / "iters.csv"
        log.to_csv(p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "iter,energy,bulk,surface,min_det,step,residual"
        assert lines[1].endswith(",nan")
        assert lines[2].split(",")[0] == "1"
