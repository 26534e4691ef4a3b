"""Parameter record and vector-field evaluation in three charts.

The family under study is the planar system with 2n-fold rotational
symmetry

    dz/dt = p z^(n-1) conj(z)^(n-2) + s z^n conj(z)^(n-1) - conj(z)^(2n-1)

with complex parameters p = p1 + i p2 and s = s1 + i s2.  All polar
quantities use the squared modulus r = |z|^2, i.e. the chart

    z = sqrt(r) (cos(theta) + i sin(theta)).

In that chart, after rescaling time by r^(n-2), the system reads

    r'     = 2 r (p1 + r s1 - r cos(2 n theta))
    theta' = p2 + r (s2 + sin(2 n theta))

which is orbit-equivalent to the Cartesian field on r > 0.  All stability
and limit-cycle statements produced by this package refer to the rescaled
system; for r > 0 the two systems have identical orbits and orientation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import RequiresS2, ValidityWarning

import warnings

#: largest accepted symmetry half-order; z^(2n-1) overflows double range for
#: moderate |z| beyond this.  Adjustable via set_max_symmetry_order().
_MAX_N = 64


def set_max_symmetry_order(n_max: int) -> None:
    """Raise or lower the cap on the symmetry parameter n (default 64)."""
    global _MAX_N
    if n_max < 2:
        raise ValueError("cap must be at least 2")
    _MAX_N = int(n_max)


@dataclass(frozen=True)
class Params:
    """The four real parameters plus the symmetry integer n (order is 2n)."""

    p1: float
    p2: float
    s1: float
    s2: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if self.n > _MAX_N:
            raise ValueError(
                f"n = {self.n} exceeds the cap {_MAX_N}; "
                "see set_max_symmetry_order()"
            )
        for name in ("p1", "p2", "s1", "s2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def p(self) -> complex:
        return complex(self.p1, self.p2)

    @property
    def s(self) -> complex:
        return complex(self.s1, self.s2)


def require_s2(params: Params) -> None:
    """Reject parameters with |s2| <= 1 (equilibria at infinity)."""
    if abs(params.s2) <= 1.0:
        raise RequiresS2(
            f"|s2| = {abs(params.s2)} <= 1: classification requires |s2| > 1"
        )


def warn_outside_scope(params: Params, *, check_s1: bool = False) -> None:
    """Warn when n <= 3 (and optionally s1 = 0), outside the hypotheses
    backing the closed-form classification results."""
    if params.n <= 3:
        warnings.warn(
            f"n = {params.n} <= 3: classification results are derived for "
            "n > 3 and are reported on a fail-soft basis",
            ValidityWarning,
            stacklevel=3,
        )
    if check_s1 and params.s1 == 0.0:
        warnings.warn(
            "s1 = 0 is outside the hypotheses of the count/uniqueness "
            "results; output is exploratory",
            ValidityWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class PolarState:
    """A point of the rescaled polar system; r is the squared modulus."""

    r: float
    theta: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"r = {self.r} < 0")

    @property
    def modulus(self) -> float:
        """|z| = sqrt(r)."""
        return math.sqrt(self.r)


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("components must be finite")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


def polar_to_cartesian(state: PolarState) -> CartesianPoint:
    m = math.sqrt(state.r)
    return CartesianPoint(m * math.cos(state.theta), m * math.sin(state.theta))


def cartesian_to_polar(point: CartesianPoint) -> PolarState:
    return PolarState(point.x * point.x + point.y * point.y,
                      math.atan2(point.y, point.x) % (2.0 * math.pi))


def eval_field(params: Params, z: CartesianPoint) -> CartesianPoint:
    """Cartesian velocity dz/dt of the unrescaled system.

    The three monomials are evaluated by integer complex powers (repeated
    multiplication), never through trigonometric expansion, so the result
    is exact complex arithmetic up to rounding for every n.
    """
    n = params.n
    w = z.z
    wb = w.conjugate()
    zdot = (params.p * w ** (n - 1) * wb ** (n - 2)
            + params.s * w ** n * wb ** (n - 1)
            - wb ** (2 * n - 1))
    return CartesianPoint(zdot.real, zdot.imag)


def eval_polar(params: Params, state: PolarState) -> tuple[float, float]:
    """(r', theta') of the time-rescaled polar system."""
    r, theta = state.r, state.theta
    two_n_theta = 2.0 * params.n * theta
    rdot = 2.0 * r * (params.p1 + r * params.s1 - r * math.cos(two_n_theta))
    thetadot = params.p2 + r * (params.s2 + math.sin(two_n_theta))
    return rdot, thetadot


def eval_phi(params: Params, phi_state: tuple[float, float]) -> tuple[float, float]:
    """(r', phi') in the rescaled-angle chart phi = n*theta."""
    r, phi = phi_state
    two_phi = 2.0 * phi
    rdot = 2.0 * r * (params.p1 + r * params.s1 - r * math.cos(two_phi))
    phidot = (params.p2 + r * (params.s2 + math.sin(two_phi))) / params.n
    return rdot, phidot


def polar_velocity_to_cartesian(state: PolarState, rdot: float,
                                thetadot: float) -> tuple[float, float]:
    """Push a polar velocity (r', theta') through the chart z = sqrt(r)e^{i theta}.

    Valid for r > 0.  The returned vector is parallel to eval_field with a
    positive factor r^(n-2).
    """
    r, theta = state.r, state.theta
    m = math.sqrt(r)
    radial = rdot / (2.0 * m)  # d|z|/dt = r'/(2 sqrt(r))
    c, s = math.cos(theta), math.sin(theta)
    return radial * c - m * s * thetadot, radial * s + m * c * thetadot


def divergence(params: Params, z: CartesianPoint) -> float:
    """Trace of the Cartesian Jacobian of eval_field.

    Closed form 2(n-1) p1 r^(n-2) + 2n s1 r^(n-1) with r = |z|^2; the field
    is area-preserving exactly on the locus p1 = s1 = 0.
    """
    n = params.n
    r = z.x * z.x + z.y * z.y
    return (2.0 * (n - 1) * params.p1 * r ** (n - 2)
            + 2.0 * n * params.s1 * r ** (n - 1))


def is_hamiltonian(params: Params) -> bool:
    """True iff the Cartesian field is Hamiltonian (p1 = 0 and s1 = 0)."""
    return params.p1 == 0.0 and params.s1 == 0.0


def hamiltonian_value(params: Params, state: PolarState) -> float:
    """First integral of the rescaled system on the Hamiltonian locus.

    H = p2 r^(n-1) + (n-1)/n * r^n (s2 + sin(2 n theta)); constant along
    trajectories when p1 = s1 = 0 (useful as an integration-accuracy probe).
    """
    n = params.n
    r, theta = state.r, state.theta
    return (params.p2 * r ** (n - 1)
            + (n - 1) / n * r ** n * (params.s2 + math.sin(2.0 * n * theta)))


def equivariance_residual(params: Params, z: CartesianPoint, k: int) -> float:
    """|f(g z) - g f(z)| for the rotation g = exp(i k pi / n)."""
    if not 0 <= k < 2 * params.n:
        raise ValueError(f"k must be in [0, 2n), got {k}")
    g = cmath.exp(1j * k * math.pi / params.n)
    gz = g * z.z
    f_gz = eval_field(params, CartesianPoint(gz.real, gz.imag)).z
    g_fz = g * eval_field(params, z).z
    return abs(f_gz - g_fz)
