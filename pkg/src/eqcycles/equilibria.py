"""Closed-form location, counting and linear classification of equilibria.

Nontrivial equilibria of the rescaled polar system satisfy

    0 = p1 + r (s1 - cos(2 phi))        (r > 0, phi = n theta)
    0 = p2 + r (s2 + sin(2 phi))

Eliminating r through the half-angle substitution t = tan(phi) reduces the
angle equation to the quadratic  T+ t^2 - 2 p1 t - T- = 0  whose
discriminant is (four times) the quadratic form

    Q(a, b) = a^2 + b^2 - (a s2 - b s1)^2

evaluated at (p1, p2).  The sign of Q at (p1, p2) therefore decides between
0, 1 (double) or 2 fundamental angles, i.e. between 1, 2n+1 and 4n+1
equilibria in the plane once the p2 s2 < 0 positivity condition for r is
taken into account.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotAnEquilibrium, ZeroP
from .field import Params, PolarState, eval_polar, require_s2, warn_outside_scope

# classification tolerances; see README for the rationale
TOL_EQ = 1e-10       # max residual accepted by classify_equilibrium
TOL_SN = 1e-8        # |eigenvalue| below this counts as zero
TOL_Q_REL = 1e-9     # half-width of the Q = 0 band, relative to max(|p|^2, 1)

KIND_ORIGIN_FOCUS = "origin-focus"
KIND_NODE = "node"
KIND_FOCUS = "focus"
KIND_SADDLE = "saddle"
KIND_SADDLE_NODE = "saddle-node"
KIND_CENTER_CANDIDATE = "center-candidate"
KIND_DEGENERATE = "degenerate"


@dataclass(frozen=True)
class QuadraticFormValue:
    """Value of Q(a,b) = a^2 + b^2 - (a s2 - b s1)^2 with its arguments."""

    value: float
    arguments: tuple[float, float]


@dataclass(frozen=True)
class Equilibrium:
    state: PolarState
    eigenvalues: tuple[complex, complex]
    kind: str
    fundamental: bool  # lies in the sector 0 <= theta < pi/n


@dataclass(frozen=True)
class EquilibriumCount:
    count: int                    # 1, 2n+1 or 4n+1
    regime: str                   # Q_negative | Q_zero | Q_positive | p2s2_nonneg
    within_hypotheses: bool = True  # False when s1 = 0 (fail-soft exploration)


def quadratic_form(a: float, b: float, params: Params) -> QuadraticFormValue:
    """Q(a, b) for the stored (s1, s2)."""
    w = a * params.s2 - b * params.s1
    return QuadraticFormValue(a * a + b * b - w * w, (a, b))


def quadratic_form_expanded(a: float, b: float, params: Params) -> float:
    """Equivalent expanded form (1-s2^2)a^2 + (1-s1^2)b^2 + 2 s1 s2 a b."""
    s1, s2 = params.s1, params.s2
    return ((1.0 - s2 * s2) * a * a + (1.0 - s1 * s1) * b * b
            + 2.0 * s1 * s2 * a * b)


def tol_q(params: Params) -> float:
    """Width of the tolerance band around the Q = 0 stratum."""
    return TOL_Q_REL * max(params.p1 ** 2 + params.p2 ** 2, 1.0)


def t_plus_minus(params: Params) -> tuple[float, float]:
    """The linear combinations T+ = p2 - p1 s2 + p2 s1, T- = p2 + p1 s2 - p2 s1.

    They are the leading/trailing coefficients of the angle quadratic and
    satisfy T+ + T- = 2 p2 and p1^2 + T+ T- = Q(p1, p2).
    """
    cross = params.p1 * params.s2 - params.p2 * params.s1
    return params.p2 - cross, params.p2 + cross


def _angle_residual(params: Params, phi: float) -> float:
    """Residual of the r-eliminated angle equation (zero at equilibria)."""
    return (params.p1 * params.s2 - params.p2 * params.s1
            + params.p1 * math.sin(2.0 * phi) + params.p2 * math.cos(2.0 * phi))


def _radius_at(params: Params, phi: float) -> float:
    return -params.p2 / (params.s2 + math.sin(2.0 * phi))


def _polish(params: Params, r: float, phi: float, steps: int = 2) -> tuple[float, float]:
    """A couple of guarded Newton steps on the divided equilibrium system.

    Removes trigonometric round-off from the closed-form root.  Uses a
    least-squares solve so the near-singular Jacobian on the Q = 0 stratum
    cannot blow the step up; a step is kept only if it lowers the residual.
    """
    def residual(rr, pp):
        return np.array([
            params.p1 + rr * (params.s1 - math.cos(2.0 * pp)),
            params.p2 + rr * (params.s2 + math.sin(2.0 * pp)),
        ])

    cur = residual(r, phi)
    for _ in range(steps):
        s2p, c2p = math.sin(2.0 * phi), math.cos(2.0 * phi)
        jac = np.array([
            [params.s1 - c2p, 2.0 * r * s2p],
            [params.s2 + s2p, 2.0 * r * c2p],
        ])
        step, *_ = np.linalg.lstsq(jac, -cur, rcond=None)
        r_new, phi_new = r + step[0], phi + step[1]
        if r_new <= 0:
            break
        nxt = residual(r_new, phi_new)
        if np.linalg.norm(nxt) >= np.linalg.norm(cur):
            break
        r, phi, cur = r_new, phi_new, nxt
    return r, phi


def solve_fundamental_equilibria(params: Params) -> list[PolarState]:
    """All equilibria with r > 0 and phi = n theta in [0, pi).

    Branch logic: the tan chart covers phi in (-pi/2, pi/2) when T+ != 0,
    the cot chart covers (0, pi) when T- != 0; the degenerate cases T+ = 0
    and T- = 0 contribute the boundary angles pi/2 and 0 plus one linear
    root each.  Roots from overlapping charts are deduplicated, polished by
    Newton, and reported as theta = phi / n in [0, pi/n).
    """
    require_s2(params)
    if params.p1 == 0.0 and params.p2 == 0.0:
        raise ZeroP("p1 = p2 = 0")
    warn_outside_scope(params)

    delta = quadratic_form(params.p1, params.p2, params).value
    band = tol_q(params)
    if delta < -band:
        return []
    sq = math.sqrt(max(delta, 0.0)) if abs(delta) > band else 0.0

    t_plus, t_minus = t_plus_minus(params)
    candidates: list[float] = []

    if t_plus != 0.0:
        for sign in (+1.0, -1.0):
            candidates.append(math.atan((params.p1 + sign * sq) / t_plus))
    else:
        # the quadratic degenerates: one root escapes to phi = pi/2
        candidates.append(math.pi / 2.0)
        if params.p1 != 0.0:
            candidates.append(math.atan(-t_minus / (2.0 * params.p1)))

    if t_minus != 0.0:
        for sign in (+1.0, -1.0):
            tau = (-params.p1 + sign * sq) / t_minus
            candidates.append(math.atan2(1.0, tau))  # acot, range (0, pi)
    else:
        candidates.append(0.0)
        if params.p1 != 0.0:
            # cot-chart linear root: T- tau^2 + 2 p1 tau - T+ = 0 with T- = 0
            tau = t_plus / (2.0 * params.p1)
            candidates.append(math.atan2(1.0, tau))

    # normalize to [0, pi), keep positive radii, polish, deduplicate
    found: list[tuple[float, float]] = []
    for phi in candidates:
        phi %= math.pi
        denom = params.s2 + math.sin(2.0 * phi)
        r = -params.p2 / denom
        if r <= 0.0:
            continue
        if abs(_angle_residual(params, phi)) > 1e-6 * (1.0 + abs(params.p1) + abs(params.p2)):
            continue  # spurious chart artifact
        r, phi = _polish(params, r, phi)
        phi %= math.pi
        if r <= 0.0:
            continue
        if not any(abs(r - r0) < 1e-7 * (1.0 + r0)
                   and min(abs(phi - f0), math.pi - abs(phi - f0)) < 1e-7
                   for r0, f0 in found):
            found.append((r, phi))

    found.sort(key=lambda rf: rf[1])
    return [PolarState(r, phi / params.n) for r, phi in found]


def jacobian(params: Params, state: PolarState) -> np.ndarray:
    """Jacobian of the rescaled polar system at (r, theta)."""
    r, theta = state.r, state.theta
    a = 2.0 * params.n * theta
    sa, ca = math.sin(a), math.cos(a)
    return np.array([
        [2.0 * params.p1 + 4.0 * r * (params.s1 - ca), 4.0 * params.n * r * r * sa],
        [params.s2 + sa, 2.0 * params.n * r * ca],
    ])


def saddle_node_lambda2(params: Params, use_printed_form: bool = False) -> float:
    """Nonzero eigenvalue at a saddle-node on the Q(p1,p2) = 0 stratum.

    Derived form (default): on the stratum the double angle root is
    tan(phi) = p1 / T+, and substituting into the Jacobian trace gives

        lambda2 = -2 p1 - 2 n p2 (T+^2 - p1^2) / (s2 (T+^2 + p1^2) + 2 p1 T+).

    ``use_printed_form`` selects an alternative grouping
    2p1 - 2p2[(2s1-n+2)T+^2 + p1^2(2s1+n-2)] / [s2 T+^2 + 2p1 T+ + p1 s2]
    retained for comparison only; it disagrees with the Jacobian eigenvalue
    (see the cross-check in the test suite) and should not be trusted.
    """
    t_plus, _ = t_plus_minus(params)
    p1, p2, n = params.p1, params.p2, params.n
    if use_printed_form:
        num = (2.0 * params.s1 - n + 2.0) * t_plus ** 2 + p1 ** 2 * (2.0 * params.s1 + n - 2.0)
        den = params.s2 * t_plus ** 2 + 2.0 * p1 * t_plus + p1 * params.s2
        return 2.0 * p1 - 2.0 * p2 * num / den
    den = params.s2 * (t_plus ** 2 + p1 ** 2) + 2.0 * p1 * t_plus
    if den == 0.0:
        raise ZeroDivisionError("degenerate stratum corner (p1 = 0, |s1| = 1)")
    return -2.0 * p1 - 2.0 * n * p2 * (t_plus ** 2 - p1 ** 2) / den


def _residual_scale(params: Params, r: float) -> float:
    return (1.0 + abs(params.p1) + abs(params.p2)
            + (abs(params.s1) + abs(params.s2) + 1.0) * (1.0 + r))


def classify_equilibrium(params: Params, state: PolarState,
                         tol_eq: float = TOL_EQ, tol_sn: float = TOL_SN) -> Equilibrium:
    """Linear type of an equilibrium from its Jacobian eigenvalues.

    The origin (r = 0) is classified by the sign rules for the monodromic
    focus: the polar chart is singular there and the Jacobian formula does
    not describe the planar linearization.
    """
    r, theta = state.r, state.theta
    fundamental = 0.0 <= theta % (2.0 * math.pi) < math.pi / params.n

    if r < 1e-14:
        if params.p1 == 0.0 and params.s1 == 0.0:
            kind = KIND_CENTER_CANDIDATE
        else:
            kind = KIND_ORIGIN_FOCUS
        return Equilibrium(PolarState(0.0, 0.0), (0j, 0j), kind, True)

    rdot, thetadot = eval_polar(params, state)
    if math.hypot(rdot, thetadot) > tol_eq * (1.0 + r) * _residual_scale(params, r):
        raise NotAnEquilibrium(
            f"residual {math.hypot(rdot, thetadot):.3e} at r={r}, theta={theta}"
        )

    eigs = np.linalg.eigvals(jacobian(params, state))
    eigs = tuple(sorted((complex(e) for e in eigs), key=lambda e: abs(e)))
    lam1, lam2 = eigs
    scale = max(abs(lam1), abs(lam2), 1e-300)

    if abs(lam1.imag) > tol_sn * scale:  # complex pair
        if abs(lam1.real) < tol_sn * scale:
            kind = KIND_CENTER_CANDIDATE
        else:
            kind = KIND_FOCUS
    elif abs(lam2) < tol_sn:
        kind = KIND_DEGENERATE
    elif abs(lam1) < tol_sn:
        kind = KIND_SADDLE_NODE
    elif lam1.real * lam2.real < 0:
        kind = KIND_SADDLE
    else:
        kind = KIND_NODE
    return Equilibrium(state, eigs, kind, fundamental)


def all_equilibria(params: Params) -> list[Equilibrium]:
    """Origin plus the 2n symmetry copies of every fundamental equilibrium.

    The list length is 1, 2n+1 or 4n+1; copies are ordered by angle.
    """
    result = [classify_equilibrium(params, PolarState(0.0, 0.0))]
    spacing = math.pi / params.n
    for base in solve_fundamental_equilibria(params):
        for k in range(2 * params.n):
            theta = (base.theta + k * spacing) % (2.0 * math.pi)
            eq = classify_equilibrium(params, PolarState(base.r, theta))
            result.append(eq)
    result[1:] = sorted(result[1:], key=lambda e: e.state.theta)
    return result


def count_equilibria(params: Params) -> EquilibriumCount:
    """Equilibrium count from pure sign logic (no root finding)."""
    require_s2(params)
    if params.p1 == 0.0 and params.p2 == 0.0:
        raise ZeroP("p1 = p2 = 0")
    warn_outside_scope(params, check_s1=True)
    within = params.s1 != 0.0

    q = quadratic_form(params.p1, params.p2, params).value
    band = tol_q(params)
    if q < -band:
        # no angle roots at all; reported in preference to p2s2_nonneg
        return EquilibriumCount(1, "Q_negative", within)
    if params.p2 * params.s2 >= 0.0:
        return EquilibriumCount(1, "p2s2_nonneg", within)
    if q > band:
        return EquilibriumCount(4 * params.n + 1, "Q_positive", within)
    return EquilibriumCount(2 * params.n + 1, "Q_zero", within)
