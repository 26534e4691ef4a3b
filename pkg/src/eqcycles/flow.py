"""Numerical integration, return maps, limit cycles and the transversal polygon.

All integration happens in the rescaled polar chart (r, theta): the
right-hand side is polynomial in r and trigonometric in theta, and it is
regular on the invariant line r = 0, so no chart switching is needed near
the origin (the Cartesian form of the rescaled field is singular there for
n > 2, not the polar one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (NoBracket, NoReturn, NotOnStratum, SectionTangency,
                     StepFailure, TransversalityFailed)
from .field import (Params, PolarState, eval_polar, polar_to_cartesian,
                    polar_velocity_to_cartesian)
from .equilibria import (Equilibrium, all_equilibria, jacobian, quadratic_form,
                         solve_fundamental_equilibria, tol_q)
from .abel import abel_coefficients

DEFAULT_RTOL = 1e-10
CYCLE_RTOL = 1e-12          # used for fixed-point polish and multipliers
TOL_FIXED_POINT = 1e-9
MULTIPLIER_STEP = 1e-6      # relative FD step for the return-map derivative
HYPERBOLIC_BAND = 1e-4
BLOWUP_RADIUS = 1e8         # in r = |z|^2 units
CONVERGED_RADIUS = 1e-12
BRACKET_SPAN = (1e-4, 1e4)


def _rhs(params: Params):
    p1, p2, s1, s2, n = params.p1, params.p2, params.s1, params.s2, params.n

    def rhs(_t, y):
        r, theta = y
        a = 2.0 * n * theta
        return (2.0 * r * (p1 + r * s1 - r * math.cos(a)),
                p2 + r * (s2 + math.sin(a)))

    return rhs


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    termination: str   # time-limit | blow-up | converged-to-point | section-crossing

    def states(self) -> list[tuple[float, PolarState]]:
        return [(float(t), PolarState(max(float(rr), 0.0), float(th)))
                for t, rr, th in zip(self.times, self.r, self.theta)]

    def cartesian(self) -> np.ndarray:
        m = np.sqrt(np.maximum(self.r, 0.0))
        return np.column_stack([m * np.cos(self.theta), m * np.sin(self.theta)])


def integrate(params: Params, start: PolarState, horizon: float,
              tol: float = DEFAULT_RTOL, max_samples: int = 4000,
              blowup_radius: float = BLOWUP_RADIUS) -> Trajectory:
    """Adaptive integration of the rescaled polar system.

    Terminates early when r exceeds ``blowup_radius`` or falls below the
    convergence floor (the trajectory has collapsed onto the origin).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")

    def hit_blowup(_t, y):
        return y[0] - blowup_radius

    hit_blowup.terminal = True

    def hit_origin(_t, y):
        return y[0] - CONVERGED_RADIUS

    hit_origin.terminal = True

    sol = solve_ivp(_rhs(params), (0.0, horizon), [start.r, start.theta],
                    method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True,
                    events=[hit_blowup, hit_origin])
    if sol.status == -1:
        raise StepFailure(sol.message)
    if sol.status == 1:
        termination = "blow-up" if len(sol.t_events[0]) else "converged-to-point"
    else:
        termination = "time-limit"

    t_end = sol.t[-1]
    ts = np.linspace(0.0, t_end, min(max_samples, max(2, 4 * len(sol.t))))
    ys = sol.sol(ts)
    return Trajectory(ts, ys[0], ys[1], termination)


def _return_solution(params: Params, r0: float, section_angle: float,
                     rtol: float, t_max: float):
    """Integrate until theta has advanced by a full turn; returns the ivp
    solution, the signed turn direction, and the event time."""
    _, thetadot0 = eval_polar(params, PolarState(r0, section_angle))
    scale = abs(params.p2) + (abs(params.s2) + 1.0) * r0
    if abs(thetadot0) < 1e-9 * max(scale, 1e-12):
        raise SectionTangency(
            f"theta' = {thetadot0:.3e} on the section theta = {section_angle}")
    direction = math.copysign(1.0, thetadot0)
    target = section_angle + direction * 2.0 * math.pi
    rhs = _rhs(params)
    speed_floor = 1e-9 * max(1.0, abs(params.p1) + abs(params.p2))

    def full_turn(_t, y):
        return y[1] - target

    full_turn.terminal = True
    full_turn.direction = direction

    def hit_blowup(_t, y):
        return y[0] - BLOWUP_RADIUS

    hit_blowup.terminal = True

    def hit_origin(_t, y):
        return y[0] - CONVERGED_RADIUS

    hit_origin.terminal = True

    def stalled(t, y):
        # creeping into a (saddle-node) equilibrium: stop instead of
        # burning the whole time budget at vanishing speed
        if t < 1.0:
            return 1.0
        rd, td = rhs(t, y)
        return math.hypot(rd, td) - speed_floor

    stalled.terminal = True

    def angular_turnaround(_t, y):
        # periodic orbits around the origin never meet {theta' = 0}; a
        # trajectory that crosses it cannot be (or converge to) a cycle,
        # and integrating past the crossing is a slow creep along the
        # saddle-node ring
        return rhs(_t, y)[1]

    angular_turnaround.terminal = True

    sol = solve_ivp(rhs, (0.0, t_max), [r0, section_angle],
                    method="DOP853", rtol=rtol, atol=rtol * 1e-2,
                    dense_output=True,
                    events=[full_turn, hit_blowup, hit_origin, stalled,
                            angular_turnaround])
    if sol.status == -1:
        raise StepFailure(sol.message)
    if len(sol.t_events[0]) == 0:
        if len(sol.t_events[1]):
            raise NoReturn("trajectory blew up before completing a turn")
        if len(sol.t_events[2]):
            raise NoReturn("trajectory collapsed onto the origin")
        if len(sol.t_events[3]):
            raise NoReturn("trajectory converged to an equilibrium")
        if len(sol.t_events[4]):
            raise NoReturn("trajectory crossed the {theta'=0} set")
        raise NoReturn(f"no full turn within rescaled time {t_max}")
    return sol, direction, float(sol.t_events[0][0])


def return_map(params: Params, r0: float, section_angle: float,
               rtol: float = DEFAULT_RTOL, t_max: float = 500.0) -> float:
    """First-return radius of the section theta = section_angle.

    The crossing is localized by the integrator's root finder on the dense
    output, so the event angle is resolved to machine-level accuracy.
    """
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    sol, _, t_event = _return_solution(params, r0, section_angle, rtol, t_max)
    return float(sol.sol(t_event)[0])


@dataclass(frozen=True)
class LimitCycle:
    section_angle: float
    fixed_r: float
    period: float
    multiplier: float
    enclosed_equilibria: int
    stability: str            # "stable" | "unstable"
    hyperbolic: bool
    samples: np.ndarray       # (k, 2) array of (r, theta) along the cycle

    def radius_at(self, theta: float) -> float:
        """Cycle radius at a given angle (the cycle is a graph over theta)."""
        thetas = self.samples[:, 1]
        lo = thetas.min()
        span = np.mod(theta - lo, 2.0 * math.pi) + lo
        order = np.argsort(thetas)
        return float(np.interp(span, thetas[order], self.samples[order, 0]))


def _displacement(params: Params, r0: float, section_angle: float, rtol: float) -> float:
    return return_map(params, r0, section_angle, rtol=rtol) - r0


def _count_enclosed(params: Params, sol, t_event: float,
                    equilibria: list[Equilibrium]) -> int:
    """Equilibria inside the closed curve swept by the periodic solution.

    The cycle cannot meet {theta' = 0}, so it is a graph r = rho(theta); a
    point is enclosed iff its radius is below the graph at its angle.
    """
    ts = np.linspace(0.0, t_event, 4096)
    ys = sol.sol(ts)
    theta = ys[1]
    rho = ys[0]
    lo = theta.min()
    order = np.argsort(theta)
    theta_sorted, rho_sorted = theta[order], rho[order]
    count = 0
    for eq in equilibria:
        if eq.state.r == 0.0:
            count += 1
            continue
        ang = np.mod(eq.state.theta - lo, 2.0 * math.pi) + lo
        boundary = np.interp(ang, theta_sorted, rho_sorted)
        if eq.state.r < boundary:
            count += 1
    return count


def find_limit_cycle(params: Params, bracket: tuple[float, float],
                     section_angle: float, rtol: float = DEFAULT_RTOL) -> LimitCycle:
    """Locate a fixed point of the return map inside a sign-change bracket.

    Bisection down to the fixed-point tolerance, followed by a secant
    polish at tighter integrator tolerance; the multiplier is the centered
    finite-difference derivative of the return map at the fixed point.
    """
    r_lo, r_hi = bracket
    d_lo = _displacement(params, r_lo, section_angle, rtol)
    d_hi = _displacement(params, r_hi, section_angle, rtol)
    if d_lo == 0.0:
        r_star = r_lo
    elif d_hi == 0.0:
        r_star = r_hi
    else:
        if d_lo * d_hi > 0.0:
            raise NoBracket(
                f"displacement has signs ({d_lo:+.2e}, {d_hi:+.2e}) on {bracket}")
        for _ in range(200):
            mid = 0.5 * (r_lo + r_hi)
            d_mid = _displacement(params, mid, section_angle, rtol)
            if d_lo * d_mid <= 0.0:
                r_hi, d_hi = mid, d_mid
            else:
                r_lo, d_lo = mid, d_mid
            if (r_hi - r_lo) < 0.25 * TOL_FIXED_POINT * max(1.0, mid):
                break
        r_star = 0.5 * (r_lo + r_hi)

    # secant polish at tight tolerance
    f0 = _displacement(params, r_star, section_angle, CYCLE_RTOL)
    h = max(1e-9, 1e-7 * r_star)
    f1 = _displacement(params, r_star + h, section_angle, CYCLE_RTOL)
    for _ in range(4):
        slope = (f1 - f0) / h
        if slope == 0.0:
            break
        step = -f0 / slope
        if abs(step) > 0.2 * r_star:
            step = math.copysign(0.2 * r_star, step)
        r_new = r_star + step
        f_new = _displacement(params, r_new, section_angle, CYCLE_RTOL)
        h = r_new - r_star
        r_star, f0, f1 = r_new, f_new, f0
        if abs(f_new) < 0.1 * TOL_FIXED_POINT * max(1.0, r_star):
            break

    residual = _displacement(params, r_star, section_angle, CYCLE_RTOL)
    if abs(residual) > TOL_FIXED_POINT * max(1.0, r_star):
        raise NoReturn(f"fixed-point polish stalled at residual {residual:.2e}")

    fd = MULTIPLIER_STEP * r_star
    p_plus = return_map(params, r_star + fd, section_angle, rtol=CYCLE_RTOL)
    p_minus = return_map(params, r_star - fd, section_angle, rtol=CYCLE_RTOL)
    multiplier = (p_plus - p_minus) / (2.0 * fd)

    sol, _, t_event = _return_solution(params, r_star, section_angle,
                                       CYCLE_RTOL, 500.0)
    enclosed = _count_enclosed(params, sol, t_event, all_equilibria(params))
    ts = np.linspace(0.0, t_event, 1024)
    ys = sol.sol(ts)
    return LimitCycle(
        section_angle=section_angle,
        fixed_r=r_star,
        period=t_event,
        multiplier=multiplier,
        enclosed_equilibria=enclosed,
        stability="stable" if multiplier < 1.0 else "unstable",
        hyperbolic=abs(multiplier - 1.0) > HYPERBOLIC_BAND,
        samples=np.column_stack([ys[0], ys[1]]),
    )


def default_section_angle(params: Params) -> float:
    """A section ray at least pi/(8n) away from every equilibrium angle."""
    n = params.n
    candidate = math.pi / (2.0 * n)
    try:
        angles = [eq.theta % (math.pi / n) for eq in solve_fundamental_equilibria(params)]
    except Exception:
        angles = []
    if not angles:
        return candidate
    spacing = math.pi / n
    best, best_gap = candidate, -1.0
    for frac in np.linspace(0.05, 0.95, 19):
        probe = frac * spacing
        gap = min(min(abs(probe - a), spacing - abs(probe - a)) for a in angles)
        if gap > best_gap:
            best, best_gap = probe, gap
    return best


def search_limit_cycle(params: Params, section_angle: float | None = None,
                       r_lo: float = BRACKET_SPAN[0], r_hi: float = BRACKET_SPAN[1],
                       grid: int = 25, rtol: float = DEFAULT_RTOL) -> LimitCycle | None:
    """Automatic bracketing along a geometric radius grid, then refinement.

    Grid points where the return map is undefined (collapse onto the
    origin, blow-up) are skipped; a sign change of the displacement between
    consecutive valid points brackets a cycle.  Returns None when no
    bracket exists in the scanned span.
    """
    if section_angle is None:
        section_angle = default_section_angle(params)
    radii = np.geomspace(r_lo, r_hi, grid)
    last = None  # (r, displacement)
    for r0 in radii:
        try:
            d = _displacement(params, float(r0), section_angle, rtol)
        except (NoReturn, SectionTangency):
            last = None
            continue
        if last is not None and last[1] * d < 0.0:
            return find_limit_cycle(params, (last[0], float(r0)), section_angle, rtol)
        if d == 0.0:
            return find_limit_cycle(params, (float(r0) * 0.9, float(r0) * 1.1),
                                    section_angle, rtol)
        last = (float(r0), d)
    return None


def abel_shoot(params: Params, x0: float, rtol: float = 1e-12,
               x_limit: float = 1e4) -> float:
    """Value x(2 pi) of the scalar reduction started at x(0) = x0.

    Returns signed infinity when the solution escapes |x| > x_limit before
    a full period (divergence marker; the cubic term produces finite-theta
    blow-up, so a step-size underflow far from the origin means the same).
    """
    coeffs = abel_coefficients(params)  # raises ZeroP2 when undefined

    def rhs(theta, y):
        return [coeffs.rhs(theta, y[0])]

    def escape(_theta, y):
        return abs(y[0]) - x_limit

    escape.terminal = True

    sol = solve_ivp(rhs, (0.0, 2.0 * math.pi), [x0], method="DOP853",
                    rtol=rtol, atol=1e-14, events=[escape])
    last = float(sol.y[0][-1]) if sol.y[0].size else x0
    if sol.status == -1:
        if abs(last) > 0.01 * x_limit:
            return math.copysign(math.inf, last)
        raise StepFailure(sol.message)
    if sol.status == 1:
        return math.copysign(math.inf, last)
    return last


def abel_periodic_solutions(params: Params, x_min: float, x_max: float,
                            grid: int = 160) -> list[float]:
    """Fixed points of the period map of the scalar reduction on a grid.

    Counts sign changes of x(2 pi) - x0 between consecutive grid points
    where the shoot stays finite, refining each bracket by bisection.
    """
    xs = np.linspace(x_min, x_max, grid)
    gaps: list[tuple[float, float]] = []
    last = None
    for x0 in xs:
        # diverging shoots still carry a usable sign (+-inf - x0)
        g = abel_shoot(params, float(x0)) - x0
        if last is not None and last[1] * g < 0.0:
            gaps.append((last[0], float(x0)))
        last = (float(x0), g)

    roots = []
    for lo, hi in gaps:
        g_lo = abel_shoot(params, lo) - lo
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            g_mid = abel_shoot(params, mid) - mid
            if g_lo * g_mid <= 0.0:
                hi = mid
            else:
                lo, g_lo = mid, g_mid
        roots.append(0.5 * (lo + hi))
    return roots


# ---------------------------------------------------------------------------
# transversal polygon on the Q = 0 stratum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransversalPolygon:
    """Polygonal barrier along which the field crosses strictly outward.

    ``vertices`` lists the fundamental chain origin -> saddle-node in polar
    coordinates; ``segments``/``margins`` cover all 2n symmetry copies.
    The margin of a segment is the minimum over >= 200 interior samples of
    the unit field's component along the outward normal.
    """

    vertices: list[PolarState]
    segments: list[tuple[tuple[float, float], tuple[float, float]]]  # cartesian
    margins: list[float]
    ray_angle: float

    @property
    def min_margin(self) -> float:
        return min(self.margins)


def _to_xy(state: PolarState) -> np.ndarray:
    pt = polar_to_cartesian(state)
    return np.array([pt.x, pt.y])


def _unit_field(params: Params, point: np.ndarray) -> np.ndarray:
    r = float(point @ point)
    theta = math.atan2(point[1], point[0])
    vx, vy = polar_velocity_to_cartesian(PolarState(r, theta),
                                         *eval_polar(params, PolarState(r, theta)))
    v = np.array([vx, vy])
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return v
    return v / norm


def _segment_margin(params: Params, a: np.ndarray, b: np.ndarray,
                    interior: np.ndarray, samples: int = 256) -> float:
    """Signed crossing margin with the normal oriented away from ``interior``."""
    tangent = b - a
    normal = np.array([-tangent[1], tangent[0]])
    normal /= np.linalg.norm(normal)
    mid = 0.5 * (a + b)
    if normal @ (mid - interior) < 0.0:
        normal = -normal
    ts = (np.arange(samples) + 0.5) / samples
    worst = math.inf
    for t in ts:
        point = a + t * tangent
        worst = min(worst, float(_unit_field(params, point) @ normal))
    return worst


def _first_transversality_loss(params: Params, base: np.ndarray, direction: np.ndarray,
                               length: float, samples: int = 400) -> float:
    """First distance along base + x*direction where the crossing sign flips."""
    normal = np.array([-direction[1], direction[0]])
    xs = np.linspace(length / samples, length, samples)
    reference = 0.0
    for x in xs:
        value = float(_unit_field(params, base + x * direction) @ normal)
        if reference == 0.0:
            reference = value
            continue
        if value * reference < 0.0:
            return float(x)
    return float(length)


def _segments_intersect(a, b, c, d):
    """Proper intersection point of segments ab and cd, or None."""
    r = b - a
    s = d - c
    denom = r[0] * s[1] - r[1] * s[0]
    if abs(denom) < 1e-14:
        return None
    t = ((c - a)[0] * s[1] - (c - a)[1] * s[0]) / denom
    u = ((c - a)[0] * r[1] - (c - a)[1] * r[0]) / denom
    if 0.02 < t < 0.98 and 0.02 < u < 0.98:
        return a + t * r
    return None


def build_transversal_polygon(params: Params, samples_per_segment: int = 256
                              ) -> TransversalPolygon:
    """Barrier construction around the ring of saddle-nodes.

    Preconditions: Q(p1, p2) = 0 within tolerance, p2 s2 < 0, |s2| > 1.
    The fundamental chain consists of a radial piece on a ray where theta'
    keeps one sign below the {theta' = 0} radius, a piece along the
    eigendirection of the nonzero eigenvalue at the saddle-node, and a
    connector when the two do not meet.  Candidate ray angles start at a
    quarter sector away from the saddle-node and are narrowed until every
    segment passes the sampled transversality check.
    """
    q = quadratic_form(params.p1, params.p2, params).value
    if abs(q) > tol_q(params) or params.p2 * params.s2 >= 0.0 or abs(params.s2) <= 1.0:
        raise NotOnStratum(
            f"Q = {q:.3e}, p2*s2 = {params.p2 * params.s2:.3e}, s2 = {params.s2}")

    fundamental = solve_fundamental_equilibria(params)
    if not fundamental:
        raise NotOnStratum("no nontrivial equilibria found on the stratum")
    base = fundamental[0]
    n = params.n
    spacing = math.pi / n

    # representative closest to the positive x-axis
    theta_star = base.theta % spacing
    if theta_star > spacing / 2.0:
        theta_star -= spacing
    saddle = PolarState(base.r, theta_star)
    z_star = _to_xy(saddle)

    # eigendirection of the nonzero eigenvalue, pushed to the Cartesian chart
    jac = jacobian(params, saddle)
    eigvals, eigvecs = np.linalg.eig(jac)
    idx = int(np.argmax(np.abs(eigvals)))
    v_pol = np.real(eigvecs[:, idx])
    m = math.sqrt(saddle.r)
    chart = np.array([
        [math.cos(saddle.theta) / (2.0 * m), -m * math.sin(saddle.theta)],
        [math.sin(saddle.theta) / (2.0 * m), m * math.cos(saddle.theta)],
    ])
    v_cart = chart @ v_pol
    v_cart /= np.linalg.norm(v_cart)

    # ray on the side of the saddle-node that theta' pushes away from
    offset_sign = -1.0 if params.p2 < 0.0 else 1.0
    candidates = []
    quarter = offset_sign * spacing / 4.0  # the quarter-sector ray
    if (quarter - theta_star) * offset_sign > 0.02 * spacing:
        candidates.append(quarter)
    candidates.extend(theta_star + offset_sign * frac * spacing
                      for frac in (0.25, 0.20, 0.15, 0.30, 0.10, 0.35, 0.05))

    failures: list[str] = []
    for theta_ray in candidates:
        r0 = -params.p2 / (params.s2 + math.sin(2.0 * n * theta_ray))
        if r0 <= 0.0:
            continue
        z2 = _to_xy(PolarState(0.95 * r0, theta_ray))
        origin = np.zeros(2)

        for v in (v_cart, -v_cart):
            reach = _first_transversality_loss(params, z_star, v, 2.0 * np.linalg.norm(z_star))
            z1 = z_star + 0.95 * reach * v
            crossing = _segments_intersect(origin, z2, z_star, z1)
            if crossing is not None:
                chain = [origin, crossing, z_star]
            else:
                chain = [origin, z2, z1, z_star]
            interior = np.mean(chain, axis=0)
            margins = []
            ok = True
            for a, b in zip(chain[:-1], chain[1:]):
                margin = _segment_margin(params, a, b, interior, samples_per_segment)
                margins.append(margin)
                if margin <= 0.0:
                    ok = False
                    break
            if not ok:
                failures.append(
                    f"ray {theta_ray:.4f}, eig {'+' if v is v_cart else '-'}: "
                    f"margin {min(margins):.3e}")
                continue

            # replicate by the symmetry and recheck each copy
            segments, all_margins = [], []
            for k in range(2 * n):
                ang = k * spacing
                rot = np.array([[math.cos(ang), -math.sin(ang)],
                                [math.sin(ang), math.cos(ang)]])
                chain_k = [rot @ p for p in chain]
                interior_k = rot @ interior
                for a, b in zip(chain_k[:-1], chain_k[1:]):
                    margin = _segment_margin(params, a, b, interior_k,
                                             samples_per_segment)
                    segments.append((tuple(a), tuple(b)))
                    all_margins.append(margin)
            if min(all_margins) > 0.0:
                vertices = []
                for p in chain:
                    rr = float(p @ p)
                    vertices.append(PolarState(rr, math.atan2(p[1], p[0]) if rr > 0 else 0.0))
                return TransversalPolygon(vertices, segments, all_margins,
                                           theta_ray)
            failures.append(f"ray {theta_ray:.4f}: symmetric copy margin "
                            f"{min(all_margins):.3e}")

    raise TransversalityFailed("; ".join(failures[:6]))


def continue_cycle(params: Params, target_q: float,
                   section_angle: float | None = None) -> tuple[Params, LimitCycle | None]:
    """Re-detect the cycle after moving Q(p1, p2) to a nearby target value.

    p1 is adjusted by Newton on the quadratic Q(p1, p2) = target (two steps
    suffice); the cycle is re-bracketed from scratch at the new parameters.
    """
    p1 = params.p1
    for _ in range(3):
        moved = Params(p1, params.p2, params.s1, params.s2, params.n)
        q = quadratic_form(p1, params.p2, moved).value
        dq = (2.0 * (1.0 - params.s2 ** 2) * p1
              + 2.0 * params.s1 * params.s2 * params.p2)
        if dq == 0.0:
            break
        p1 += (target_q - q) / dq
    moved = Params(p1, params.p2, params.s1, params.s2, params.n)
    cycle = search_limit_cycle(moved, section_angle=section_angle)
    return moved, cycle
