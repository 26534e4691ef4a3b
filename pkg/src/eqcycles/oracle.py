"""Brute-force verifiers, independent of every closed form in the package.

These exist so the test suite can cross-check the analytic machinery:
grid-seeded Newton iteration for equilibria, dense sign sampling for the
scalar-reduction coefficients, and adaptive quadrature for the boundary
integral at infinity.  None of them consult the branch formulas they are
meant to verify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import RequiresS2
from .field import Params, PolarState


@dataclass(frozen=True)
class OracleConfig:
    grid_r: tuple[float, float | None, int] = (1e-3, None, 64)  # None: auto bound
    grid_theta: int = 64
    newton_tol: float = 1e-11
    newton_max_iter: int = 50
    dedup_radius: float = 1e-6


def _radius_bound(params: Params) -> float:
    """A priori bound: every nontrivial equilibrium has
    r = -p2/(s2 + sin(2 n theta)) <= |p2| / (|s2| - 1)."""
    return 10.0 * max(1.0, abs(params.p2) / (abs(params.s2) - 1.0))


def oracle_equilibria(params: Params, config: OracleConfig = OracleConfig()) -> list[PolarState]:
    """All equilibria found by Newton iteration from a seed grid.

    Newton runs (vectorized) on the divided residual system

        F1 = p1 + r (s1 - cos(2 n theta)) ,  F2 = p2 + r (s2 + sin(2 n theta))

    from every (r, theta) seed; converged roots with r > 0 are deduplicated
    with angular wrap-around and the origin is appended.  The theta seed
    count is rounded up to a multiple of 2n so every symmetry sector is
    seeded identically.
    """
    n = params.n
    r_min, r_max, r_count = config.grid_r
    if r_max is None:
        r_max = _radius_bound(params)
    sectors = 2 * n
    theta_count = sectors * max(4, -(-config.grid_theta // sectors))

    r_seeds = np.geomspace(r_min, r_max, r_count)
    theta_seeds = np.arange(theta_count) * (2.0 * math.pi / theta_count)
    r_grid, theta_grid = np.meshgrid(r_seeds, theta_seeds)
    r = r_grid.ravel().copy()
    theta = theta_grid.ravel().copy()
    active = np.ones(r.shape, dtype=bool)

    p1, p2, s1, s2 = params.p1, params.p2, params.s1, params.s2
    scale = 1.0 + abs(p1) + abs(p2)

    for _ in range(config.newton_max_iter):
        if not active.any():
            break
        angle = 2.0 * n * theta[active]
        ca, sa = np.cos(angle), np.sin(angle)
        ra = r[active]
        f1 = p1 + ra * (s1 - ca)
        f2 = p2 + ra * (s2 + sa)
        j11 = s1 - ca
        j12 = 2.0 * n * ra * sa
        j21 = s2 + sa
        j22 = 2.0 * n * ra * ca
        det = j11 * j22 - j12 * j21
        bad = np.abs(det) < 1e-14
        det[bad] = np.nan
        dr = (-f1 * j22 + f2 * j12) / det
        dtheta = (-f2 * j11 + f1 * j21) / det
        step_r = ra + dr
        step_theta = theta[active] + dtheta
        diverged = (~np.isfinite(step_r)) | (~np.isfinite(step_theta)) \
            | (np.abs(step_r) > 1e8)
        step_r[diverged] = ra[diverged]
        step_theta[diverged] = theta[active][diverged]
        r[active] = step_r
        theta[active] = step_theta
        still = active.copy()
        still[active] = ~diverged & (np.hypot(f1, f2) > config.newton_tol * scale * 1e-3)
        dead = active.copy()
        dead[active] = diverged
        active = still
        active &= ~dead

    # final residual filter
    angle = 2.0 * n * theta
    f1 = p1 + r * (s1 - np.cos(angle))
    f2 = p2 + r * (s2 + np.sin(angle))
    ok = (np.hypot(f1, f2) < config.newton_tol * scale) & (r > 1e-9)
    roots_r = r[ok]
    roots_theta = np.mod(theta[ok], 2.0 * math.pi)

    deduped: list[tuple[float, float]] = []
    order = np.argsort(roots_theta)
    for idx in order:
        rr, tt = float(roots_r[idx]), float(roots_theta[idx])
        matched = False
        for known_r, known_t in deduped:
            gap = abs(tt - known_t)
            gap = min(gap, 2.0 * math.pi - gap)
            if gap < config.dedup_radius and abs(rr - known_r) < config.dedup_radius * (1.0 + known_r):
                matched = True
                break
        if not matched:
            deduped.append((rr, tt))

    states = [PolarState(0.0, 0.0)]
    states.extend(PolarState(rr, tt) for rr, tt in deduped)
    return states


def oracle_sign_change(evaluator: Callable[[float], float],
                       samples: int = 10_000) -> tuple[bool, tuple[float, float] | None]:
    """Dense sampling over [0, 2 pi) with bisection refinement of a crossing."""
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    thetas = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    values = np.array([evaluator(t) for t in thetas])
    signs = np.sign(values)
    nonzero = signs != 0
    idx = np.nonzero(nonzero)[0]
    if idx.size == 0:
        return False, None
    flips = np.nonzero(np.diff(signs[idx]) != 0)[0]
    if flips.size == 0:
        return False, None
    i0, i1 = idx[flips[0]], idx[flips[0] + 1]
    lo, hi = float(thetas[i0]), float(thetas[i1])
    f_lo = evaluator(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = evaluator(mid)
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    span = 0.5 * (hi - lo) + 1e-9
    return True, (lo - span, hi + span)


def oracle_infinity_integral(params: Params) -> float:
    """Quadrature of the boundary integrand, printed-form verbatim."""
    if abs(params.s2) <= 1.0:
        raise RequiresS2(f"|s2| = {abs(params.s2)} <= 1")
    n = params.n

    def integrand(theta):
        return (-2.0 * (params.s1 - math.cos(2.0 * n * theta))
                / (params.s2 + math.sin(2.0 * n * theta)))

    value, _ = quad(integrand, 0.0, 2.0 * math.pi,
                    epsabs=1e-12, epsrel=1e-13, limit=800)
    return value
