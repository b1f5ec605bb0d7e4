import math

import numpy as np
import pytest

from trajlab.scattering import (HardSphere, RepulsivePower, ScreenedCoulomb,
                                turning_radius, deflection_angle,
                                DeflectionFunction, transfer_density,
                                inverse_transfer_density,
                                isotropic_source_density, transverse_mass,
                                solid_angle_mass, FlipperScene, random_scene,
                                trace_flipper, bin_edges, AngleBinExperiment,
                                entry_measure, flipper_trajectory_builder,
                                cross_sections_from_rates,
                                flipper_cross_section)
from trajlab.core import ensemble_statistics
from trajlab.rng import stream


class TestTurningRadius:
    def test_hard_sphere(self):
        pot = HardSphere(2.0)
        assert turning_radius(pot, 1.0, 0.5) == 2.0
        assert turning_radius(pot, 1.0, 3.0) == 3.0

    def test_free_limit(self):
        # negligible potential: the turning radius approaches s
        pot = ScreenedCoulomb(1e-12, 1.0)
        assert turning_radius(pot, 1.0, 2.0) == pytest.approx(2.0, rel=1e-9)

    def test_energy_balance_at_turn(self):
        pot = ScreenedCoulomb(0.7, 1.3)
        E, s = 1.1, 0.8
        r0 = turning_radius(pot, E, s)
        # definition: E = V(r0) + E s^2 / r0^2
        assert float(pot(r0)) + E * s * s / (r0 * r0) == pytest.approx(
            E, rel=1e-10)


class TestDeflection:
    def test_hard_sphere_reflection_law(self):
        pot = HardSphere(1.0)
        for s in np.linspace(0.05, 0.95, 10):
            assert deflection_angle(pot, 1.0, float(s)) == pytest.approx(
                2.0 * math.acos(s), abs=1e-12)

    def test_miss_is_no_deflection(self):
        assert deflection_angle(HardSphere(1.0), 1.0, 1.5) == 0.0

    def test_head_on_is_backscatter(self):
        assert deflection_angle(HardSphere(1.0), 1.0, 0.0) == pytest.approx(
            math.pi)

    def test_inverse_square_analytic(self):
        # k/r potential: s = (k / 2E) cot(theta/2)
        k, E = 1.0, 1.0
        pot = RepulsivePower(k, 1.0)
        for s in np.linspace(0.1, 4.0, 12):
            expected = 2.0 * math.atan2(k, 2.0 * E * s)
            assert deflection_angle(pot, E, float(s)) == pytest.approx(
                expected, rel=1e-7)

    def test_integral_matches_ode(self):
        pot = ScreenedCoulomb(1.0, 2.0)
        for s in (0.3, 0.8, 1.5):
            quad = deflection_angle(pot, 1.0, s, method="integral")
            ode = deflection_angle(pot, 1.0, s, method="ode")
            assert quad == pytest.approx(ode, abs=2e-6)

    def test_screening_weakens_deflection(self):
        strong = deflection_angle(ScreenedCoulomb(1.0, 10.0), 1.0, 1.0)
        weak = deflection_angle(ScreenedCoulomb(1.0, 0.5), 1.0, 1.0)
        assert weak < strong


class TestDeflectionFunction:
    def test_inverse_roundtrip(self):
        dfl = DeflectionFunction(ScreenedCoulomb(1.0, 2.0), 1.0)
        for s in (0.2, 0.7, 1.4):
            assert dfl.inverse(dfl(s)) == pytest.approx(s, rel=1e-8)

    def test_hard_sphere_inverse_vs_closed_form(self):
        dfl = DeflectionFunction(HardSphere(1.0), 1.0)
        for th in (0.5, 1.5, 2.8):
            assert dfl.inverse(th) == pytest.approx(math.cos(th / 2.0),
                                                    rel=1e-9)

    def test_derivative_matches_finite_differences(self):
        dfl = DeflectionFunction(ScreenedCoulomb(1.0, 2.0), 1.0)
        th = 1.1
        s = dfl.inverse(th)
        h = 1e-5
        fd = (dfl.inverse(th + h) - dfl.inverse(th - h)) / (2 * h)
        assert dfl.ds_dtheta(th) == pytest.approx(fd, rel=1e-4)

    def test_inverse_domain_checked(self):
        dfl = DeflectionFunction(HardSphere(1.0), 1.0)
        with pytest.raises(ValueError):
            dfl.inverse(0.0)
        with pytest.raises(ValueError):
            dfl.inverse(math.pi)


class TestTransfer:
    def test_hard_sphere_transfer_is_constant(self):
        # unit-density beam through a hard sphere: rho_b = R^2 / 4 everywhere
        R = 1.3
        dfl = DeflectionFunction(HardSphere(R), 1.0)
        grid = np.linspace(0.2, 3.0, 40)
        rho = transfer_density(lambda s: 1.0, dfl, grid)
        assert np.allclose(rho, R * R / 4.0, rtol=1e-6)

    def test_inverse_square_shape(self):
        # k/r transfer of a unit beam follows 1/sin^4(theta/2)
        k, E = 1.0, 1.0
        dfl = DeflectionFunction(RepulsivePower(k, 1.0), E)
        grid = np.linspace(0.3, 2.8, 25)
        rho = transfer_density(lambda s: 1.0, dfl, grid)
        ref = (k / (4.0 * E)) ** 2 / np.sin(grid / 2.0) ** 4
        assert np.allclose(rho, ref, rtol=1e-5)

    def test_mass_preserved_through_transfer(self):
        R = 1.0
        dfl = DeflectionFunction(HardSphere(R), 1.0)
        disk = 1.0 / (math.pi * R * R)
        rho_a = lambda s: disk if 0.0 < s <= R else 0.0
        m_in = transverse_mass(rho_a, R)
        grid = np.linspace(1e-3, math.pi - 1e-3, 2001)
        rho_b = transfer_density(rho_a, dfl, grid)
        m_out = solid_angle_mass(rho_b, grid)
        assert m_in == pytest.approx(1.0, rel=1e-6)
        assert m_out == pytest.approx(m_in, rel=1e-3)

    def test_inverse_transfer_roundtrip(self):
        dfl = DeflectionFunction(ScreenedCoulomb(1.0, 2.0), 1.0)
        grid = np.linspace(0.4, 2.0, 10)
        rho_b = transfer_density(lambda s: 1.0, dfl, grid)
        back = inverse_transfer_density(
            lambda th: float(np.interp(th, grid, rho_b)), dfl,
            np.array([dfl.inverse(float(t)) for t in grid]))
        assert np.allclose(back, 1.0, rtol=1e-4)

    def test_isotropic_source_gives_uniform_sphere(self):
        dfl = DeflectionFunction(HardSphere(1.0), 1.0)
        rho_a = isotropic_source_density(dfl)
        grid = np.linspace(0.3, 2.9, 15)
        rho_b = transfer_density(rho_a, dfl, grid)
        assert np.allclose(rho_b, 1.0 / (4.0 * math.pi), rtol=1e-4)


class TestFlipperScene:
    def test_spacing_respected(self):
        scene = random_scene(27, 0.05, 1.0, seed=5)
        c = scene.centers
        L = scene.cell_size
        # minimum periodic image distance across all pairs
        best = math.inf
        for i in range(len(c)):
            d = c[i + 1:] - c[i]
            d -= L * np.round(d / L)
            if len(d):
                best = min(best, float(np.sqrt((d ** 2).sum(-1)).min()))
        assert best >= 10.0 * 0.05 - 1e-12

    def test_reproducible_placement(self):
        a = random_scene(27, 0.05, 1.0, seed=5)
        b = random_scene(27, 0.05, 1.0, seed=5)
        assert np.array_equal(a.centers, b.centers)


class TestTraceFlipper:
    def _scene(self):
        return random_scene(64, 0.05, 1.0, seed=2)

    def test_encounter_invariants(self):
        scene = self._scene()
        rng = stream(21)
        pos = rng.random(3) * scene.cell_size
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        tr = trace_flipper(scene, pos, u, 12)
        assert len(tr.encounters) == 12
        lengths = [e.path_length for e in tr.encounters]
        assert all(b > a for a, b in zip(lengths, lengths[1:]))
        for e in tr.encounters:
            assert 0.0 <= e.impact_parameter < scene.action_range
            assert -math.pi < e.theta_signed <= math.pi
            assert abs(e.theta_signed) == pytest.approx(e.theta, abs=1e-12)

    def test_axis_aligned_direction_stays_finite(self):
        # directions with zero components must not poison the wall search
        scene = self._scene()
        for u in ([1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0],
                  [0.6, 0.8, 0.0]):
            tr = trace_flipper(scene, np.array([0.1, 0.2, 0.3]),
                               np.asarray(u), 8)
            assert np.isfinite(tr.vertices).all()
            assert np.all((tr.vertices >= 0.0)
                          & (tr.vertices <= scene.cell_size))

    def test_record_path_off_keeps_statistics(self):
        scene = self._scene()
        pos = np.array([0.15, 0.45, 0.8])
        u = np.array([0.6, 0.64, 0.48])
        u /= np.linalg.norm(u)
        a = trace_flipper(scene, pos, u, 10, record_path=True)
        b = trace_flipper(scene, pos, u, 10, record_path=False)
        for ea, eb in zip(a.encounters, b.encounters):
            assert ea.center_index == eb.center_index
            assert ea.theta_signed == eb.theta_signed
            assert ea.path_length == eb.path_length

    def test_max_path_length_stops_early(self):
        scene = self._scene()
        tr = trace_flipper(scene, np.array([0.1, 0.2, 0.3]),
                           np.array([1.0, 0.0, 0.0]), 50,
                           max_path_length=scene.cell_size)
        assert len(tr.encounters) < 50


class TestAngleBins:
    def test_edges_partition(self):
        e = bin_edges(8)
        assert e[0] == -math.pi and e[-1] == math.pi
        assert len(e) == 9

    def test_classification(self):
        exp = AngleBinExperiment(4)

        class E:
            def __init__(self, th):
                self.data = type("R", (), {"theta_signed": th})()

        assert exp.classify(E(-math.pi + 1e-9)) == 0
        assert exp.classify(E(-1e-9)) == 1
        assert exp.classify(E(1e-9)) == 2
        assert exp.classify(E(math.pi)) == 3


class TestFlipperPipeline:
    def test_cross_sections_scale_rates(self):
        rates = np.array([0.25, 0.75])
        np.testing.assert_allclose(
            cross_sections_from_rates(rates, 0.05),
            rates * math.pi * 0.05 ** 2)

    def test_entry_measure_samples(self):
        scene = random_scene(27, 0.05, 1.0, seed=1)
        pts = entry_measure(scene).sampler(stream(2), 40)
        assert pts.shape == (40, 6)
        assert np.all((pts[:, :3] >= 0) & (pts[:, :3] < scene.cell_size))
        norms = np.sqrt((pts[:, 3:] ** 2).sum(-1))
        assert np.allclose(norms, 1.0, atol=1e-12)

    def test_small_ensemble_roughly_isotropic(self):
        scene = random_scene(64, 0.05, 1.0, seed=3)
        res = flipper_cross_section(scene, n_outcomes=4, n_traj=150,
                                    seed=8, n_encounters=15)
        assert res.stats.n_trajectories + res.stats.n_excluded == 150
        # four equal angle bins each carry isotropic mass 1/4 exactly
        mean = res.stats.mean
        sigma = np.sqrt(res.stats.variance / res.stats.n_trajectories)
        assert np.all(np.abs(mean - 0.25) < 4.0 * sigma + 1e-12)
        assert np.allclose(res.cross_sections,
                           mean * math.pi * 0.05 ** 2)

    def test_builder_matches_pipeline(self):
        scene = random_scene(64, 0.05, 1.0, seed=3)
        res = flipper_cross_section(scene, n_outcomes=4, n_traj=40, seed=8,
                                    n_encounters=10)
        stats = ensemble_statistics(
            entry_measure(scene),
            flipper_trajectory_builder(scene, 10),
            AngleBinExperiment(4), 40, seed=8)
        assert np.array_equal(res.stats.mean, stats.mean)
