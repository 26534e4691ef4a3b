"""Scalar reduction of the angular dynamics and its sign certificates.

For p2 != 0 the Cherkas transformation

    x = r / (p2 + r (s2 + sin(2 n theta)))

maps dr/dtheta onto the Abel equation dx/dtheta = A x^3 + B x^2 + C x.
Writing c(theta) = s2 + sin(2 n theta), a(theta) = 2 (s1 - cos(2 n theta))
and b = 2 p1, the coefficients are obtained by differentiating x along the
flow:

    A = c (b/p2 * c - a),   B = a - 2 (b/p2) c - c',   C = b / p2.

Note the c'(theta) = 2n cos(2 n theta) term in B: it comes from the
theta-dependence of the transformation itself and makes B depend on n.

Restricted to the unit circle (X, Y) = (sin 2n theta, cos 2n theta), both
coefficients factor through affine functions:

    A ~ sign(s2) * (p1 X + p2 Y + (p1 s2 - p2 s1))
    B ~ -(2 p1 X + (n+1) p2 Y + (2 p1 s2 - p2 s1))

so A changes sign iff Q(p1, p2) > 0, and B changes sign iff the n-aware
criterion 4 p1^2 + (n+1)^2 p2^2 - (2 p1 s2 - p2 s1)^2 is positive.  The
n-free quadratic form Q(2 p1, p2) is reported alongside for reference; it
understates the sign-changing region of B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import OnSingularSet, ZeroP2
from .field import Params, PolarState, require_s2, warn_outside_scope
from .equilibria import quadratic_form, tol_q

#: offset used to place sign witnesses on either side of a root
WITNESS_DELTA_FACTOR = 1e-4

#: absolute tolerance for the verification quadratures
QUAD_ABS_TOL = 1e-10

#: grid size for the certificate's own dense sign scan (the independent
#: oracle in eqcycles.oracle samples more finely)
DENSE_SAMPLES = 4096


def _require_p2(params: Params) -> None:
    if params.p2 == 0.0:
        raise ZeroP2(
            "p2 = 0: the scalar reduction is undefined; integrate the planar "
            "system directly (eqcycles.flow)"
        )


@dataclass(frozen=True)
class AbelCoefficients:
    """Evaluators for the cubic/quadratic/linear coefficients.

    ``a``/``b`` map theta to a float; ``c_lin`` is the constant linear
    coefficient 2 p1 / p2.
    """

    params: Params
    a: Callable[[float], float]
    b: Callable[[float], float]
    c_lin: float

    def rhs(self, theta: float, x: float) -> float:
        return ((self.a(theta) * x + self.b(theta)) * x + self.c_lin) * x

    def sample(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (A, B) values on an array of angles."""
        p = self.params
        sa = np.sin(2.0 * p.n * thetas)
        ca = np.cos(2.0 * p.n * thetas)
        c = p.s2 + sa
        a_vals = c * (2.0 * p.p1 / p.p2 * c - 2.0 * (p.s1 - ca))
        b_vals = (2.0 * (p.s1 - ca) - 4.0 * p.p1 / p.p2 * c - 2.0 * p.n * ca)
        return a_vals, b_vals


def abel_coefficients(params: Params) -> AbelCoefficients:
    """Coefficient evaluators of the reduced scalar equation (p2 != 0)."""
    _require_p2(params)
    p1, p2, s1, s2, n = params.p1, params.p2, params.s1, params.s2, params.n

    def coeff_a(theta: float) -> float:
        sa = math.sin(2.0 * n * theta)
        ca = math.cos(2.0 * n * theta)
        c = s2 + sa
        return c * (2.0 * p1 / p2 * c - 2.0 * (s1 - ca))

    def coeff_b(theta: float) -> float:
        sa = math.sin(2.0 * n * theta)
        ca = math.cos(2.0 * n * theta)
        return (2.0 * (s1 - ca) - 4.0 * p1 / p2 * (s2 + sa)
                - 2.0 * n * ca)

    return AbelCoefficients(params, coeff_a, coeff_b, 2.0 * p1 / p2)


def angular_speed_factor(params: Params, theta: float) -> float:
    """c(theta) = s2 + sin(2 n theta); 1/c is the image of infinity."""
    return params.s2 + math.sin(2.0 * params.n * theta)


def cherkas(params: Params, state: PolarState) -> float:
    """Image x = r / (p2 + r c(theta)) of a polar point (p2 != 0)."""
    _require_p2(params)
    denom = params.p2 + state.r * angular_speed_factor(params, state.theta)
    if abs(denom) < 1e-12 * (1.0 + state.r):
        raise OnSingularSet(f"theta' = {denom:.3e} at (r={state.r}, theta={state.theta})")
    return state.r / denom


def cherkas_inverse(params: Params, x: float, theta: float) -> float:
    """Radius with image x on the ray theta: r = p2 x / (1 - x c(theta))."""
    _require_p2(params)
    denom = 1.0 - x * angular_speed_factor(params, theta)
    if abs(denom) < 1e-12 * (1.0 + abs(x)):
        raise OnSingularSet(f"x = {x} is the image of infinity on theta = {theta}")
    return params.p2 * x / denom


@dataclass(frozen=True)
class SignCertificate:
    """Whether a coefficient function attains both signs on [0, 2 pi).

    ``criterion_value`` is the discriminant-style quantity whose sign
    decides; for B it carries the (n+1)^2 weight on p2^2 (the n-free
    quadratic form Q(2p1, p2) is stored separately for reporting).  In the
    |criterion| <= tol band the decision falls back to dense sampling and
    the certificate is flagged ``marginal``.
    """

    function_tag: str                       # "A" or "B"
    changes_sign: bool
    witness: tuple[float, float] | None     # theta pair with opposite signs
    criterion_value: float
    quadratic_form_value: float             # Q(p1,p2) resp. Q(2p1,p2)
    marginal: bool = False


def _affine_circle_roots(u: float, v: float, w: float) -> list[tuple[float, float]]:
    """Intersections of u X + v Y + w = 0 with the unit circle."""
    norm2 = u * u + v * v
    disc = norm2 - w * w
    if disc <= 0.0 or norm2 == 0.0:
        return []
    root = math.sqrt(disc)
    return [
        ((-u * w + v * root) / norm2, (-v * w - u * root) / norm2),
        ((-u * w - v * root) / norm2, (-v * w + u * root) / norm2),
    ]


def _certify(params: Params, tag: str, evaluator: Callable[[float], float],
             u: float, v: float, w: float, qf_value: float) -> SignCertificate:
    """Build a sign certificate from the affine factor (u, v, w).

    The criterion u^2 + v^2 - w^2 is positive exactly when the factor (and
    hence the coefficient function) attains both signs on the circle.
    Witnesses are placed delta on either side of a simple root and verified;
    in the marginal band the decision comes from dense sampling instead.
    """
    criterion = u * u + v * v - w * w
    band = tol_q(params)
    delta = WITNESS_DELTA_FACTOR * math.pi / params.n

    if abs(criterion) <= band:
        changes, witness = _dense_sign_scan(evaluator)
        return SignCertificate(tag, changes, witness, criterion, qf_value, marginal=True)

    if criterion < 0.0:
        changes, witness = _dense_sign_scan(evaluator)
        if changes:  # should not happen; fail loudly rather than certify wrongly
            return SignCertificate(tag, True, witness, criterion, qf_value, marginal=True)
        return SignCertificate(tag, False, None, criterion, qf_value)

    for x_root, y_root in _affine_circle_roots(u, v, w):
        theta0 = math.atan2(x_root, y_root) / (2.0 * params.n) % (2.0 * math.pi)
        lo, hi = theta0 - delta, theta0 + delta
        f_lo, f_hi = evaluator(lo), evaluator(hi)
        if f_lo * f_hi < 0.0:
            return SignCertificate(tag, True, (lo, hi), criterion, qf_value)
    # roots exist but both witnesses straddle a double root; scan instead
    changes, witness = _dense_sign_scan(evaluator)
    return SignCertificate(tag, changes, witness, criterion, qf_value, marginal=True)


def _dense_sign_scan(evaluator: Callable[[float], float],
                     samples: int = DENSE_SAMPLES) -> tuple[bool, tuple[float, float] | None]:
    previous_theta = 0.0
    previous = evaluator(0.0)
    for i in range(1, samples):
        theta = 2.0 * math.pi * i / samples
        value = evaluator(theta)
        if previous * value < 0.0:
            return True, (previous_theta, theta)
        if value != 0.0:
            previous, previous_theta = value, theta
    return False, None


def sign_certificate_A(params: Params) -> SignCertificate:
    """Certificate for the cubic coefficient; criterion Q(p1, p2)."""
    require_s2(params)
    _require_p2(params)
    coeffs = abel_coefficients(params)
    q = quadratic_form(params.p1, params.p2, params).value
    return _certify(params, "A", coeffs.a,
                    params.p1, params.p2,
                    params.p1 * params.s2 - params.p2 * params.s1, q)


def sign_change_criterion_B(params: Params) -> float:
    """4 p1^2 + (n+1)^2 p2^2 - (2 p1 s2 - p2 s1)^2; positive iff B changes sign."""
    w = 2.0 * params.p1 * params.s2 - params.p2 * params.s1
    return (4.0 * params.p1 ** 2
            + (params.n + 1.0) ** 2 * params.p2 ** 2 - w * w)


def sign_certificate_B(params: Params) -> SignCertificate:
    """Certificate for the quadratic coefficient.

    The decision uses the n-aware criterion (see module docstring); the
    n-free Q(2p1, p2) is recorded in ``quadratic_form_value``.
    """
    require_s2(params)
    _require_p2(params)
    coeffs = abel_coefficients(params)
    q2 = quadratic_form(2.0 * params.p1, params.p2, params).value
    return _certify(params, "B", coeffs.b,
                    2.0 * params.p1, (params.n + 1.0) * params.p2,
                    2.0 * params.p1 * params.s2 - params.p2 * params.s1, q2)


def lyapunov_constants(params: Params) -> tuple[float, float]:
    """(V1, V2) for the monodromic origin.

    V1 = exp(4 pi p1 / p2) - 1 and V2 = integral of B over a period, whose
    oscillatory terms vanish: V2 = 4 pi (p2 s1 - 2 p1 s2) / p2.
    """
    _require_p2(params)
    v1 = math.expm1(4.0 * math.pi * params.p1 / params.p2)
    v2 = 4.0 * math.pi * (params.p2 * params.s1 - 2.0 * params.p1 * params.s2) / params.p2
    return v1, v2


@dataclass(frozen=True)
class OriginClassification:
    stability: str           # "unstable" | "stable" | "center"
    monodromic: bool         # p2 != 0 (no arrival directions at the origin)
    v1: float
    v2: float


def classify_origin(params: Params) -> OriginClassification:
    """Stability of the origin from the sign of p1 (then s1 via V2)."""
    _require_p2(params)
    v1, v2 = lyapunov_constants(params)
    if params.p1 > 0.0:
        stability = "unstable"
    elif params.p1 < 0.0:
        stability = "stable"
    elif params.s1 > 0.0:
        stability = "unstable"
    elif params.s1 < 0.0:
        stability = "stable"
    else:
        stability = "center"   # Hamiltonian locus
    return OriginClassification(stability, True, v1, v2)


@dataclass(frozen=True)
class InfinityReport:
    no_equilibria_at_infinity: bool
    stability: str            # "attractor" | "repeller" | "undetermined"
    integral_value: float


def infinity_integral_closed_form(params: Params) -> float:
    """-sgn(s2) * 4 pi s1 / sqrt(s2^2 - 1), for |s2| > 1."""
    require_s2(params)
    return (-math.copysign(1.0, params.s2) * 4.0 * math.pi * params.s1
            / math.sqrt(params.s2 ** 2 - 1.0))


def classify_infinity(params: Params) -> InfinityReport:
    """Behaviour of the circle at infinity in the compactified system.

    There are no equilibria at infinity iff |s2| > 1; in that case the sign
    of the boundary integral (negative = attractor) reduces to the sign of
    s1 s2.
    """
    if abs(params.s2) <= 1.0:
        return InfinityReport(False, "undetermined", math.nan)
    value = infinity_integral_closed_form(params)
    if params.s1 == 0.0:
        return InfinityReport(True, "undetermined", value)
    return InfinityReport(True, "attractor" if value < 0.0 else "repeller", value)


def verify_infinity_integral(params: Params) -> float:
    """Adaptive quadrature of the boundary integrand (cross-check route)."""
    require_s2(params)
    n = params.n

    def integrand(theta):
        return (-2.0 * (params.s1 - math.cos(2.0 * n * theta))
                / (params.s2 + math.sin(2.0 * n * theta)))

    value, _ = quad(integrand, 0.0, 2.0 * math.pi,
                    epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=400)
    return value


@dataclass(frozen=True)
class UniquenessCertificate:
    """Asserts: at most one limit cycle surrounds the origin, and it is
    hyperbolic if it exists.  Valid when at least one coefficient of the
    scalar reduction is sign-definite."""

    condition: str                       # "i", "ii" or "i+ii"
    certificate_a: SignCertificate
    certificate_b: SignCertificate


def uniqueness_certificate(params: Params) -> UniquenessCertificate | None:
    """Certificate from sign-definiteness of A (condition i) or B (ii).

    Condition (ii) uses the n-aware criterion for B; the n-free form
    Q(2p1, p2) alone does not guarantee that B keeps one sign and is
    reported inside the B certificate for reference only.
    """
    require_s2(params)
    _require_p2(params)
    warn_outside_scope(params, check_s1=True)
    cert_a = sign_certificate_A(params)
    cert_b = sign_certificate_B(params)
    cond_i = not cert_a.changes_sign and not cert_a.marginal
    cond_ii = not cert_b.changes_sign and not cert_b.marginal
    # a marginal certificate that still found no sign change is accepted
    # only for the Q = 0 stratum case where the factor has a double root
    if cert_a.marginal and not cert_a.changes_sign:
        cond_i = True
    if cert_b.marginal and not cert_b.changes_sign:
        cond_ii = True
    if not (cond_i or cond_ii):
        return None
    condition = "i+ii" if (cond_i and cond_ii) else ("i" if cond_i else "ii")
    return UniquenessCertificate(condition, cert_a, cert_b)
