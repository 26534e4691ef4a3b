import math
import warnings

import numpy as np
import pytest

from eqcycles import (NoBracket, NotOnStratum, Params, PolarState,
                      SectionTangency, ValidityWarning, abel_periodic_solutions,
                      abel_shoot, all_equilibria, angular_speed_factor,
                      build_transversal_polygon, cherkas_inverse,
                      classify_infinity, classify_origin, continue_cycle,
                      count_equilibria, default_section_angle, eval_polar,
                      find_limit_cycle, hamiltonian_value, integrate,
                      quadratic_form, return_map, search_limit_cycle)
from eqcycles.errors import NoReturn

SQRT13 = math.sqrt(13.0)
STABLE_CYCLE = Params(1.0, 1.0, -0.5, 2.0, 2)
UNSTABLE_MIRROR = Params(-1.0, 1.0, 0.5, 2.0, 2)  # reversal copy of the above
STRATUM = Params((2.0 + SQRT13) / 6.0, -1.0, -0.5, 2.0, 2)


@pytest.fixture(scope="module")
def stable_cycle():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        return search_limit_cycle(STABLE_CYCLE)


class TestIntegrate:
    def test_equilibrium_is_stationary(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            eq = all_equilibria(STRATUM)[1]
        traj = integrate(STRATUM, eq.state, 5.0, tol=1e-12)
        assert abs(traj.r[-1] - eq.state.r) < 1e-8
        gap = abs(traj.theta[-1] - eq.state.theta) % (2 * math.pi)
        assert min(gap, 2 * math.pi - gap) < 1e-8

    def test_hamiltonian_first_integral_drift(self):
        p = Params(0.0, 1.0, 0.0, 2.0, 2)
        start = PolarState(0.8, 0.3)
        traj = integrate(p, start, 100.0, tol=1e-11)
        assert traj.termination == "time-limit"
        h0 = hamiltonian_value(p, start)
        drift = max(abs(hamiltonian_value(p, PolarState(max(r, 0.0), t)) - h0)
                    for r, t in zip(traj.r, traj.theta))
        assert drift < 1e-6 * max(1.0, abs(h0))

    def test_stable_origin_contracts(self):
        p = Params(-1.0, 1.0, 0.3, 0.5, 2)
        traj = integrate(p, PolarState(0.01, 0.0), 10.0)
        assert traj.r[-1] < 0.01
        assert np.all(np.diff(traj.r) <= 1e-12)

    def test_blowup_termination(self):
        p = Params(1.0, 1.0, 3.0, 0.1, 2)  # s1 > 1: radial growth wins
        traj = integrate(p, PolarState(5.0, 0.2), 50.0, blowup_radius=1e4)
        assert traj.termination == "blow-up"
        assert traj.r[-1] <= 1.01e4


class TestReturnMap:
    def test_origin_repels_small_radii(self):
        r1 = return_map(STABLE_CYCLE, 1e-3, 0.5)
        assert r1 > 1e-3

    def test_infinity_repels_large_radii(self):
        # s1 s2 < 0
        r1 = return_map(STABLE_CYCLE, 1e3, 0.5)
        assert r1 < 1e3

    def test_fixed_point_residual(self, stable_cycle):
        r_star = stable_cycle.fixed_r
        r1 = return_map(STABLE_CYCLE, r_star, stable_cycle.section_angle,
                        rtol=1e-12)
        assert abs(r1 - r_star) < 1e-9 * max(1.0, r_star)

    def test_tangency_detection(self):
        # on the {theta'=0} curve the section is tangent to the flow
        p = STRATUM
        theta = 0.9
        r_sing = -p.p2 / angular_speed_factor(p, theta)
        with pytest.raises((SectionTangency, NoReturn)):
            return_map(p, r_sing, theta)


class TestLimitCycle:
    def test_stable_cycle_properties(self, stable_cycle):
        assert stable_cycle is not None
        assert stable_cycle.stability == "stable"
        assert 0.0 < stable_cycle.multiplier < 1.0
        assert stable_cycle.hyperbolic
        assert stable_cycle.enclosed_equilibria == 1
        assert stable_cycle.period > 0.0

    def test_unstable_mirror(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            assert classify_origin(UNSTABLE_MIRROR).stability == "stable"
            assert classify_infinity(UNSTABLE_MIRROR).stability == "attractor"
            cycle = search_limit_cycle(UNSTABLE_MIRROR)
        assert cycle is not None
        assert cycle.stability == "unstable"
        assert cycle.multiplier > 1.0
        assert cycle.enclosed_equilibria == 1

    def test_mirror_radius_matches_by_reversal_symmetry(self, stable_cycle):
        # z -> conj(z) e^{i pi/2n}, t -> -t maps one system onto the other
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            mirror = search_limit_cycle(UNSTABLE_MIRROR)
        assert mirror.fixed_r == pytest.approx(
            stable_cycle.radius_at(math.pi / 4 - mirror.section_angle), rel=1e-5)

    def test_no_bracket_raises(self):
        with pytest.raises(NoBracket):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ValidityWarning)
                find_limit_cycle(STABLE_CYCLE, (3.0, 4.0), 0.5)

    def test_poincare_bendixson_witness(self):
        # origin and infinity both repel, one equilibrium: a cycle must be
        # found with automatically chosen brackets
        rng = np.random.default_rng(0)
        found = 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            while found < 5:
                p = Params(rng.uniform(0.2, 2), rng.uniform(0.3, 2),
                           rng.uniform(-2, -0.2), rng.uniform(1.5, 4), 2)
                if quadratic_form(p.p1, p.p2, p).value >= 0:
                    continue
                assert classify_origin(p).stability == "unstable"
                assert classify_infinity(p).stability == "repeller"
                assert count_equilibria(p).count == 1
                cycle = search_limit_cycle(p)
                assert cycle is not None
                assert cycle.stability == "stable"
                found += 1

    def test_cycle_avoids_theta_dot_zero(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            cycle = search_limit_cycle(STRATUM)
        speeds = [eval_polar(STRATUM, PolarState(max(r, 0.0), t))[1]
                  for r, t in cycle.samples]
        assert min(abs(s) for s in speeds) > 0.0
        assert all(s > 0 for s in speeds) or all(s < 0 for s in speeds)

    def test_stratum_cycle_encloses_ring(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            cycle = search_limit_cycle(STRATUM)
        assert cycle is not None
        assert cycle.enclosed_equilibria == 2 * STRATUM.n + 1

    def test_continuation_both_directions(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            moved, cycle = continue_cycle(STRATUM, 1e-3)
            assert quadratic_form(moved.p1, moved.p2, moved).value == pytest.approx(1e-3, rel=1e-6)
            assert cycle.enclosed_equilibria == 4 * STRATUM.n + 1
            moved, cycle = continue_cycle(STRATUM, -1e-3)
            assert cycle.enclosed_equilibria == 1


class TestAbelShoot:
    def test_invariant_zero(self):
        assert abel_shoot(STABLE_CYCLE, 0.0) == 0.0

    def test_reciprocal_speed_factor_periodic(self):
        x0 = 1.0 / angular_speed_factor(STABLE_CYCLE, 0.0)
        assert abel_shoot(STABLE_CYCLE, x0) == pytest.approx(x0, abs=1e-8)

    def test_divergence_marker(self):
        assert abel_shoot(STABLE_CYCLE, -0.5) == -math.inf

    def test_at_most_three_periodic_solutions(self):
        c0 = angular_speed_factor(STABLE_CYCLE, 0.0)
        roots = abel_periodic_solutions(STABLE_CYCLE, -0.05, 1.2 / c0, grid=80)
        assert len(roots) <= 3
        assert any(abs(r) < 1e-8 for r in roots)
        assert any(abs(r - 1.0 / c0) < 1e-6 for r in roots)

    def test_detector_consistency(self):
        # the nontrivial periodic solution maps to the return-map fixed point
        c0 = angular_speed_factor(STABLE_CYCLE, 0.0)
        roots = abel_periodic_solutions(STABLE_CYCLE, -0.05, 1.2 / c0, grid=80)
        interior = [x for x in roots if 1e-6 < x < 1.0 / c0 - 1e-6]
        assert len(interior) == 1
        r_from_abel = cherkas_inverse(STABLE_CYCLE, interior[0], 0.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            cycle = find_limit_cycle(STABLE_CYCLE, (1.0, 3.0), section_angle=0.0)
        assert r_from_abel == pytest.approx(cycle.fixed_r, rel=1e-6)


class TestTransversalPolygon:
    def test_construction_on_stratum(self):
        for n in (2, 3, 7):
            p = Params((2.0 + SQRT13) / 6.0, -1.0, -0.5, 2.0, n)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ValidityWarning)
                poly = build_transversal_polygon(p)
            assert poly.min_margin > 0.0
            assert len(poly.segments) == 2 * n * (len(poly.vertices) - 1)
            # the saddle-node is the last vertex of the fundamental chain
            saddle = poly.vertices[-1]
            assert saddle.r == pytest.approx((26.0 + SQRT13) / 39.0, rel=1e-9)
            rep = saddle.theta % (math.pi / n)
            if rep > math.pi / (2 * n):
                rep -= math.pi / n
            assert -math.pi / (4 * n) < rep < 0.0
            assert math.tan(n * rep) == pytest.approx(SQRT13 - 4.0, abs=1e-9)

    def test_off_stratum_rejected(self):
        with pytest.raises(NotOnStratum):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ValidityWarning)
                build_transversal_polygon(STABLE_CYCLE)


class TestSectionChoice:
    def test_default_avoids_equilibrium_angles(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            section = default_section_angle(STRATUM)
            eqs = all_equilibria(STRATUM)
        spacing = math.pi / STRATUM.n
        for eq in eqs:
            if eq.state.r == 0.0:
                continue
            gap = abs((section - eq.state.theta + spacing / 2) % spacing - spacing / 2)
            assert gap >= math.pi / (8 * STRATUM.n) - 1e-12
