import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hemihelix import bifurcation as bif
from hemihelix.rod_model import (
    DELTA_CHART,
    CardanPath,
    ChartError,
    ElasticConstants,
    FrameError,
    RotationPath,
    angular_strain,
    cardan_to_rotation,
    centerline,
    energy_cardan,
    energy_rotation,
    integrand,
    load_integral,
    rotation_to_cardan,
)

from .conftest import random_path

angles = st.floats(-0.4, 0.4, allow_nan=False)
triples = st.tuples(angles, angles, angles)


class TestChart:
    def test_identity(self):
        np.testing.assert_array_equal(cardan_to_rotation([0.0, 0.0, 0.0]), np.eye(3))
        np.testing.assert_array_equal(rotation_to_cardan(np.eye(3)), np.zeros(3))

    def test_gamma_only_is_rotation_about_e3(self):
        g = 0.7
        R = cardan_to_rotation([0.0, 0.0, g])
        np.testing.assert_allclose(R[:2, :2], [[math.cos(g), -math.sin(g)], [math.sin(g), math.cos(g)]], atol=1e-15)
        np.testing.assert_allclose(R[2], [0.0, 0.0, 1.0], atol=1e-15)

    def test_beta_read_from_entry_13(self):
        R = cardan_to_rotation([0.1, 0.3, -0.2])
        assert math.isclose(math.asin(R[0, 2]), 0.3, rel_tol=1e-14)

    @given(triples)
    @settings(max_examples=200, deadline=None)
    def test_orthogonal(self, p):
        R = cardan_to_rotation(p)
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(R) - 1.0) < 1e-12

    def test_round_trip_1000(self, rng):
        p = rng.normal(size=(1000, 3))
        p *= (0.4 * rng.uniform(size=1000) / np.linalg.norm(p, axis=1))[:, None]
        np.testing.assert_allclose(rotation_to_cardan(cardan_to_rotation(p)), p, atol=1e-12)

    def test_gimbal_lock_rejected(self):
        with pytest.raises(ChartError):
            cardan_to_rotation([0.0, math.pi / 2, 0.0])

    def test_far_from_identity_rejected(self):
        R = cardan_to_rotation([0.0, 0.0, 2.0 * DELTA_CHART + 0.5])
        with pytest.raises(ChartError):
            rotation_to_cardan(R)

    def test_non_rotation_rejected(self):
        with pytest.raises(FrameError):
            rotation_to_cardan(np.diag([1.0, 1.0, -1.0]))


def strain_fd(u, xi, e=1e-6):
    R0 = cardan_to_rotation(u)
    dR = (cardan_to_rotation(u + e * xi) - cardan_to_rotation(u - e * xi)) / (2 * e)
    A = R0.T @ dR
    return np.array([A[0, 1], A[0, 2], A[1, 2]])


class TestStrain:
    def test_read_off_values(self):
        np.testing.assert_allclose(angular_strain([0, 0, 0], [0, 0, 1]), [-1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(angular_strain([0, 0, 0], [1, 0, 0]), [0, 0, -1], atol=1e-15)

    @given(triples, st.tuples(*[st.floats(-2, 2)] * 3))
    @settings(max_examples=200, deadline=None)
    def test_matches_finite_differences(self, u, xi):
        u, xi = np.array(u), np.array(xi)
        np.testing.assert_allclose(angular_strain(u, xi), strain_fd(u, xi), atol=1e-6)


class TestIntegrand:
    def test_trivial_values(self, toy):
        assert math.isclose(integrand([0, 0, 0], [0, 0, 0], 0.3, toy), toy.c13 * toy.k**2 / 2 - 0.3)
        assert math.isclose(integrand([0, 0, 0], [0, 0, 1], 0.0, toy), toy.c12 / 2 + toy.c13 * toy.k**2 / 2)

    def test_bistrip_value(self, bistrip):
        # integrand evaluated at 40 digits; all strains vanish for xi = 0
        mpmath.mp.dps = 40
        u3 = mpmath.mpf("0.1")
        c13, k = mpmath.mpf("0.0065"), mpmath.mpf(375)
        expected = c13 / 2 * k**2 - 687 * mpmath.cos(0) * mpmath.cos(u3)
        assert math.isclose(integrand([0, 0, 0.1], [0, 0, 0], 687.0, bistrip), float(expected), rel_tol=1e-14)

    @given(triples, st.tuples(*[st.floats(-2, 2)] * 3), st.floats(0, 10))
    @settings(max_examples=100, deadline=None)
    def test_reflection_invariance(self, u, xi, f):
        from hemihelix.rod_model import TOY_CONSTANTS

        sig = np.array([-1.0, 1.0, -1.0])
        a = integrand(np.array(u), np.array(xi), f, TOY_CONSTANTS)
        b = integrand(sig * u, sig * xi, f, TOY_CONSTANTS)
        assert math.isclose(a, b, rel_tol=1e-13, abs_tol=1e-13)


class TestEnergy:
    def test_straight_rod(self, toy):
        path = CardanPath.zeros(16, toy.L)
        expected = toy.L * (toy.c13 * toy.k**2 / 2 - 0.7)
        assert math.isclose(energy_cardan(path, 0.7, toy), expected, rel_tol=1e-14)
        assert math.isclose(energy_rotation(RotationPath.from_cardan(path), 0.7, toy), expected, rel_tol=1e-14)

    def test_bistrip_kernel_against_adaptive_quadrature(self, bistrip):
        s, n = 0.02, 256
        path = bif.kernel_mode(bistrip, n).scaled(s)
        v, h = path.values, path.h
        f = bif.critical_force(bistrip)

        def element(i):
            slope = (v[i + 1] - v[i]) / h
            return quad(lambda t: float(integrand(v[i] + t * slope, slope, f, bistrip)), 0.0, h, epsabs=0, epsrel=1e-12)[0]

        oracle = math.fsum(element(i) for i in range(n))
        assert math.isclose(energy_cardan(path, f, bistrip), oracle, rel_tol=1e-6)

    def test_reflection(self, toy, rng):
        for _ in range(10):
            p = random_path(rng, 32, toy.L)
            assert math.isclose(energy_cardan(p, 2.0, toy), energy_cardan(p.reflect(), 2.0, toy), rel_tol=1e-12)

    def test_rotation_route_converges_second_order(self, toy):
        t = lambda n: np.linspace(0, toy.L, n + 1)  # noqa: E731
        errs = []
        ns = [64, 128, 256, 512]
        for n in ns:
            s = t(n)
            v = 0.3 * np.stack([np.sin(s), np.sin(2 * s) * 0.5, 1 - np.cos(s)], axis=1)
            path = CardanPath(v, toy.L)
            errs.append(abs(energy_rotation(RotationPath.from_cardan(path), 2.5, toy) - energy_cardan(path, 2.5, toy)))
        slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
        assert -2.3 <= slope <= -1.7

    def test_linear_in_force(self, toy, rng):
        R = RotationPath.from_cardan(random_path(rng, 64, toy.L))
        diff = energy_rotation(R, 1.0, toy) - energy_rotation(R, 3.0, toy)
        assert math.isclose(diff, 2.0 * load_integral(R), rel_tol=1e-12)


class TestPaths:
    def test_clamping_enforced(self):
        v = np.zeros((9, 3))
        v[0, 2] = 0.1
        with pytest.raises(ChartError):
            CardanPath(v, 1.0)

    def test_gimbal_margin_enforced(self):
        v = np.zeros((9, 3))
        v[4, 1] = math.pi / 2
        with pytest.raises(ChartError):
            CardanPath(v, 1.0)

    def test_rotation_path_clamping(self):
        frames = np.repeat(np.eye(3)[None], 9, axis=0)
        frames[0] = cardan_to_rotation([0, 0, 0.1])
        with pytest.raises(FrameError):
            RotationPath(frames, 1.0)

    def test_constants_validation(self):
        with pytest.raises(ValueError):
            ElasticConstants(c12=-1.0, c13=1.0, c23=1.0, k=1.0, L=1.0)


class TestCenterline:
    def test_straight(self, toy):
        pts = centerline(CardanPath.zeros(8, toy.L))
        np.testing.assert_allclose(pts[-1], [toy.L, 0, 0], atol=1e-14)
        np.testing.assert_allclose(pts[:, 1:], 0.0, atol=1e-15)

    def test_bistrip_third_angle_changes_sign_once(self, bistrip):
        phi3 = bif.kernel_mode(bistrip, 256).scaled(0.02).values[1:-1, 2]
        phi3 = phi3[np.abs(phi3) > 1e-12]
        assert np.count_nonzero(np.diff(np.sign(phi3))) == 1

    def test_endpoint_gap_is_first_order(self, bistrip):
        base = centerline(CardanPath.zeros(256, bistrip.L))[-1]
        ss = np.array([1e-3, 2e-3, 4e-3, 8e-3])
        gaps = [np.linalg.norm(centerline(bif.kernel_mode(bistrip, 256).scaled(s))[-1] - base) for s in ss]
        slope = np.polyfit(np.log(ss), np.log(gaps), 1)[0]
        # at least first order; the linear term is proportional to the mean of phi_3, zero here
        assert slope >= 0.8

    def test_pointwise_deviation_is_first_order(self, bistrip):
        base = centerline(CardanPath.zeros(256, bistrip.L))
        ss = np.array([1e-3, 2e-3, 4e-3, 8e-3])
        devs = [np.abs(centerline(bif.kernel_mode(bistrip, 256).scaled(s)) - base).max() for s in ss]
        slope = np.polyfit(np.log(ss), np.log(devs), 1)[0]
        assert 0.9 <= slope <= 1.1
