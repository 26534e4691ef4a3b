import math

import numpy as np
import pytest

from eqcycles import (CartesianPoint, Params, PolarState, cartesian_to_polar,
                      divergence, equivariance_residual, eval_field, eval_phi,
                      eval_polar, hamiltonian_value, is_hamiltonian,
                      polar_to_cartesian, polar_velocity_to_cartesian)

STABLE_CYCLE = Params(1.0, 1.0, -0.5, 2.0, 2)


def random_params(rng, n=None):
    return Params(rng.uniform(-3, 3), rng.uniform(-3, 3),
                  rng.uniform(-3, 3), rng.uniform(-4, 4),
                  n or int(rng.integers(2, 9)))


class TestEvalField:
    def test_pure_conjugate_term(self):
        p = Params(0.0, 0.0, 0.0, 0.0, 2)
        v = eval_field(p, CartesianPoint(1.0, 0.0))
        assert (v.x, v.y) == (-1.0, 0.0)

    def test_origin_always_fixed(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = random_params(rng)
            v = eval_field(p, CartesianPoint(0.0, 0.0))
            assert v.x == 0.0 and v.y == 0.0

    def test_hand_substitution(self):
        v = eval_field(STABLE_CYCLE, CartesianPoint(1.0, 0.0))
        assert v.x == pytest.approx(-0.5, abs=1e-15)
        assert v.y == pytest.approx(3.0, abs=1e-15)


class TestEvalPolar:
    def test_origin(self):
        rd, td = eval_polar(STABLE_CYCLE, PolarState(0.0, 0.3))
        assert rd == 0.0
        assert td == STABLE_CYCLE.p2

    def test_hand_substitution(self):
        rd, td = eval_polar(STABLE_CYCLE, PolarState(1.0, 0.0))
        assert rd == pytest.approx(-1.0, abs=1e-15)
        assert td == pytest.approx(3.0, abs=1e-15)

    def test_direction_consistency_with_field(self):
        # the rescaled polar velocity and the Cartesian field are parallel
        rng = np.random.default_rng(1)
        for _ in range(300):
            p = random_params(rng)
            state = PolarState(rng.uniform(0.05, 4.0), rng.uniform(0, 2 * math.pi))
            vx, vy = polar_velocity_to_cartesian(state, *eval_polar(p, state))
            f = eval_field(p, polar_to_cartesian(state))
            cross = vx * f.y - vy * f.x
            norm = math.hypot(vx, vy) * math.hypot(f.x, f.y)
            if norm < 1e-14:
                continue
            assert abs(cross) / norm < 1e-9
            assert vx * f.x + vy * f.y > 0  # same orientation


class TestEvalPhi:
    def test_origin(self):
        rd, pd = eval_phi(STABLE_CYCLE, (0.0, 0.7))
        assert rd == 0.0
        assert pd == STABLE_CYCLE.p2 / STABLE_CYCLE.n

    def test_hand_substitution(self):
        p = Params(1.0, 1.0, -0.5, 2.0, 3)
        rd, pd = eval_phi(p, (1.0, math.pi / 4))
        assert rd == pytest.approx(1.0, abs=1e-14)
        assert pd == pytest.approx(4.0 / 3.0, abs=1e-14)

    def test_consistent_with_polar_under_phi_eq_n_theta(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            p = random_params(rng)
            r = rng.uniform(0, 3)
            theta = rng.uniform(0, 2 * math.pi)
            rd1, td = eval_polar(p, PolarState(r, theta))
            rd2, pd = eval_phi(p, (r, p.n * theta))
            assert rd1 == pytest.approx(rd2, abs=1e-12 * (1 + abs(rd1)))
            assert pd * p.n == pytest.approx(td, abs=1e-12 * (1 + abs(td)))


class TestHamiltonian:
    def test_locus(self):
        assert is_hamiltonian(Params(0.0, 1.0, 0.0, 2.0, 4))
        assert not is_hamiltonian(Params(1e-300, 1.0, 0.0, 2.0, 4))
        assert not is_hamiltonian(Params(0.0, 1.0, 1e-300, 2.0, 4))

    def test_divergence_closed_form_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        h = 1e-5
        for _ in range(150):
            p = random_params(rng, n=int(rng.integers(2, 6)))
            z = CartesianPoint(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
            fx = (eval_field(p, CartesianPoint(z.x + h, z.y)).x
                  - eval_field(p, CartesianPoint(z.x - h, z.y)).x) / (2 * h)
            fy = (eval_field(p, CartesianPoint(z.x, z.y + h)).y
                  - eval_field(p, CartesianPoint(z.x, z.y - h)).y) / (2 * h)
            assert fx + fy == pytest.approx(divergence(p, z), abs=1e-6 * (1 + abs(fx + fy)))

    def test_divergence_vanishes_iff_hamiltonian(self):
        rng = np.random.default_rng(4)
        ham = Params(0.0, 1.3, 0.0, 2.0, 3)
        for _ in range(100):
            z = CartesianPoint(rng.uniform(-2, 2), rng.uniform(-2, 2))
            assert abs(divergence(ham, z)) < 1e-12

        non_ham = Params(0.3, 1.3, 0.0, 2.0, 3)
        values = [abs(divergence(non_ham, CartesianPoint(rng.uniform(-2, 2),
                                                         rng.uniform(-2, 2))))
                  for _ in range(100)]
        assert max(values) > 1e-3

    def test_first_integral_is_constant_along_the_field(self):
        # chain-rule check: grad(H) . (r', theta') = 0 on the Hamiltonian locus
        p = Params(0.0, 1.0, 0.0, 2.0, 2)
        rng = np.random.default_rng(5)
        h = 1e-6
        for _ in range(100):
            r = rng.uniform(0.1, 3.0)
            theta = rng.uniform(0, 2 * math.pi)
            rd, td = eval_polar(p, PolarState(r, theta))
            dh_dr = (hamiltonian_value(p, PolarState(r + h, theta))
                     - hamiltonian_value(p, PolarState(r - h, theta))) / (2 * h)
            dh_dth = (hamiltonian_value(p, PolarState(r, theta + h))
                      - hamiltonian_value(p, PolarState(r, theta - h))) / (2 * h)
            assert abs(dh_dr * rd + dh_dth * td) < 1e-6 * (1 + abs(dh_dr * rd))


class TestEquivariance:
    def test_identity_element_exact(self):
        assert equivariance_residual(STABLE_CYCLE, CartesianPoint(0.7, -0.2), 0) == 0.0

    def test_n2_k1(self):
        assert equivariance_residual(STABLE_CYCLE, CartesianPoint(1.0, 0.0), 1) < 1e-12

    def test_random_rotations(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            p = random_params(rng)
            z = CartesianPoint(rng.uniform(-2, 2), rng.uniform(-2, 2))
            k = int(rng.integers(0, 2 * p.n))
            mag = abs(z.z) ** (2 * p.n - 1)
            assert equivariance_residual(p, z, k) < 1e-10 * (1.0 + mag)


class TestCharts:
    def test_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(400):
            r = 10.0 ** rng.uniform(-8, 8)
            theta = rng.uniform(0, 2 * math.pi)
            state = PolarState(r, theta)
            back = cartesian_to_polar(polar_to_cartesian(state))
            assert back.r == pytest.approx(r, rel=1e-12)
            gap = abs(back.theta - theta) % (2 * math.pi)
            assert min(gap, 2 * math.pi - gap) < 1e-12

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            PolarState(-1e-3, 0.0)


class TestParams:
    def test_n_validation(self):
        with pytest.raises(ValueError):
            Params(0, 0, 0, 0, 1)
        with pytest.raises(ValueError):
            Params(0, 0, 0, 0, 65)
        with pytest.raises(ValueError):
            Params(math.nan, 0, 0, 0, 2)

    def test_complex_views(self):
        p = Params(1.0, 2.0, 3.0, 4.0, 2)
        assert p.p == 1 + 2j
        assert p.s == 3 + 4j
