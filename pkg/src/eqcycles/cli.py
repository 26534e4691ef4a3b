"""Command-line interface.

Subcommands
-----------
analyze   single-point report: quadratic forms, equilibria, stability,
          sign certificates, uniqueness certificate, optional cycle search
sweep     parameter-plane grid with region labels (CSV, optional SVG image)
cycle     limit-cycle detection with automatic bracketing and continuation
portrait  phase portrait (SVG): trajectories, equilibria, cycle, barriers
abel      scalar-reduction coefficient samples (CSV) and certificates

Exit codes: 0 success, 2 usage error, 3 numerical failure.  All numbers in
tabular output are printed with 17 significant digits so they round-trip
exactly.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import abel as abel_mod
from . import equilibria as eq_mod
from . import flow as flow_mod
from . import oracle as oracle_mod
from .errors import AnalysisError, RequiresS2, ValidityWarning, ZeroP, ZeroP2
from .field import Params, is_hamiltonian

S2_HYPOTHESIS_MSG = "hypothesis |s2|>1 violated"


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, default=_fmt) + "\n"
    width = max(len(k) for k in report)
    lines = [f"{key.ljust(width)} = {_fmt(value)}" for key, value in report.items()]
    return "\n".join(lines) + "\n"


def _params_from(args) -> Params:
    missing = [f for f in ("p1", "p2", "s1", "s2") if getattr(args, f) is None]
    if missing:
        raise SystemExit(2)
    return Params(args.p1, args.p2, args.s1, args.s2, args.n)


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    params = _params_from(args)
    report: dict = {
        "p1": params.p1, "p2": params.p2, "s1": params.s1, "s2": params.s2,
        "n": params.n,
        "hamiltonian": is_hamiltonian(params),
    }
    report["q_p1_p2"] = eq_mod.quadratic_form(params.p1, params.p2, params).value
    report["q_2p1_p2"] = eq_mod.quadratic_form(2.0 * params.p1, params.p2, params).value
    report["b_sign_criterion"] = abel_mod.sign_change_criterion_B(params)
    t_plus, t_minus = eq_mod.t_plus_minus(params)
    report["t_plus"], report["t_minus"] = t_plus, t_minus

    s2_ok = abs(params.s2) > 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)

        if not s2_ok:
            report["equilibrium_count"] = S2_HYPOTHESIS_MSG
            report["count_regime"] = S2_HYPOTHESIS_MSG
        else:
            try:
                count = eq_mod.count_equilibria(params)
                report["equilibrium_count"] = count.count
                report["count_regime"] = count.regime
                report["count_within_hypotheses"] = count.within_hypotheses
            except (ZeroP, RequiresS2) as exc:
                report["equilibrium_count"] = f"error: {exc}"

        if s2_ok:
            try:
                for i, eq in enumerate(eq_mod.all_equilibria(params)):
                    prefix = f"equilibrium.{i}"
                    report[f"{prefix}.r"] = eq.state.r
                    report[f"{prefix}.theta"] = eq.state.theta
                    report[f"{prefix}.kind"] = eq.kind
                    report[f"{prefix}.eig1_re"] = eq.eigenvalues[0].real
                    report[f"{prefix}.eig1_im"] = eq.eigenvalues[0].imag
                    report[f"{prefix}.eig2_re"] = eq.eigenvalues[1].real
                    report[f"{prefix}.eig2_im"] = eq.eigenvalues[1].imag
            except (ZeroP, AnalysisError) as exc:
                report["equilibria"] = f"error: {exc}"
        else:
            report["equilibria"] = S2_HYPOTHESIS_MSG

        try:
            origin = abel_mod.classify_origin(params)
            report["origin.stability"] = origin.stability
            report["origin.monodromic"] = origin.monodromic
            report["origin.v1"] = origin.v1
            report["origin.v2"] = origin.v2
        except ZeroP2 as exc:
            report["origin.stability"] = f"error: {exc}"

        infinity = abel_mod.classify_infinity(params)
        report["infinity.no_equilibria"] = infinity.no_equilibria_at_infinity
        report["infinity.stability"] = infinity.stability
        report["infinity.integral"] = infinity.integral_value

        for tag, builder in (("A", abel_mod.sign_certificate_A),
                             ("B", abel_mod.sign_certificate_B)):
            key = f"certificate_{tag}"
            if not s2_ok:
                report[f"{key}.changes_sign"] = S2_HYPOTHESIS_MSG
                continue
            try:
                cert = builder(params)
                report[f"{key}.changes_sign"] = cert.changes_sign
                report[f"{key}.criterion"] = cert.criterion_value
                report[f"{key}.quadratic_form"] = cert.quadratic_form_value
                report[f"{key}.marginal"] = cert.marginal
            except (ZeroP2, RequiresS2) as exc:
                report[f"{key}.changes_sign"] = f"error: {exc}"

        if not s2_ok:
            report["uniqueness_certificate"] = S2_HYPOTHESIS_MSG
        else:
            try:
                cert = abel_mod.uniqueness_certificate(params)
                report["uniqueness_certificate"] = (
                    "none" if cert is None else f"condition ({cert.condition})")
            except (ZeroP2, RequiresS2) as exc:
                report["uniqueness_certificate"] = f"error: {exc}"

        if args.cycles:
            code = _cycle_into_report(params, args, report)
            if code:
                return code

    _emit(_render(report, args.format), args.out)
    return 0


def _cycle_into_report(params: Params, args, report: dict, prefix: str = "cycle") -> int:
    try:
        cycle = flow_mod.search_limit_cycle(
            params, section_angle=args.section,
            rtol=args.tol or flow_mod.DEFAULT_RTOL)
    except AnalysisError as exc:
        report[f"{prefix}.found"] = f"error: {exc}"
        return 3
    if cycle is None:
        report[f"{prefix}.found"] = False
        return 0
    report[f"{prefix}.found"] = True
    report[f"{prefix}.section_angle"] = cycle.section_angle
    report[f"{prefix}.fixed_r"] = cycle.fixed_r
    report[f"{prefix}.modulus"] = math.sqrt(cycle.fixed_r)
    report[f"{prefix}.period"] = cycle.period
    report[f"{prefix}.multiplier"] = cycle.multiplier
    report[f"{prefix}.stability"] = cycle.stability
    report[f"{prefix}.hyperbolic"] = cycle.hyperbolic
    report[f"{prefix}.enclosed_equilibria"] = cycle.enclosed_equilibria
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

_AXIS_NAMES = ("p1", "p2", "s1", "s2")

SWEEP_COLUMNS = [
    "i", "j", "p1", "p2", "s1", "s2", "n", "q", "q2", "b_criterion",
    "t_plus", "t_minus", "p2s2_class", "q_class", "b_class", "count",
    "regime", "has_uniqueness_certificate", "oracle_count", "oracle_agrees",
]


def _sweep_point(task):
    """One grid point; pure function so the pool can run it anywhere."""
    i, j, values, n = task
    params = Params(values["p1"], values["p2"], values["s1"], values["s2"], n)
    q = eq_mod.quadratic_form(params.p1, params.p2, params).value
    q2 = eq_mod.quadratic_form(2.0 * params.p1, params.p2, params).value
    bcrit = abel_mod.sign_change_criterion_B(params)
    t_plus, t_minus = eq_mod.t_plus_minus(params)
    band = eq_mod.tol_q(params)

    p2s2_class = "p2s2_neg" if params.p2 * params.s2 < 0.0 else "p2s2_nonneg"
    if q < -band:
        q_class = "Q_neg"
    elif q > band:
        q_class = "Q_pos"
    else:
        q_class = "Q_zero_band"
    b_class = "B_sign_changing" if bcrit > band else "B_sign_definite"

    count, regime = "", ""
    if abs(params.s2) > 1.0 and not (params.p1 == 0.0 and params.p2 == 0.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            counted = eq_mod.count_equilibria(params)
        count, regime = counted.count, counted.regime
    has_cert = (q <= band) or (bcrit <= band)

    return {
        "i": i, "j": j,
        "p1": params.p1, "p2": params.p2, "s1": params.s1, "s2": params.s2,
        "n": n, "q": q, "q2": q2, "b_criterion": bcrit,
        "t_plus": t_plus, "t_minus": t_minus,
        "p2s2_class": p2s2_class, "q_class": q_class, "b_class": b_class,
        "count": count, "regime": regime,
        "has_uniqueness_certificate": has_cert,
        "oracle_count": "", "oracle_agrees": "",
    }


def cmd_sweep(args) -> int:
    axes = args.axes.split(",")
    if len(axes) != 2 or any(a not in _AXIS_NAMES for a in axes) or axes[0] == axes[1]:
        print(f"--axes must name two distinct of {_AXIS_NAMES}", file=sys.stderr)
        return 2
    mins = [float(v) for v in args.min.split(",")]
    maxs = [float(v) for v in args.max.split(",")]
    if len(mins) == 1:
        mins *= 2
    if len(maxs) == 1:
        maxs *= 2
    res = [int(v) for v in str(args.res).split(",")]
    if len(res) == 1:
        res *= 2
    if min(res) < 2:
        print("--res must be >= 2 per axis", file=sys.stderr)
        return 2

    fixed = {}
    for name in _AXIS_NAMES:
        if name in axes:
            continue
        value = getattr(args, name)
        if value is None:
            print(f"fixed value --{name} required for this sweep", file=sys.stderr)
            return 2
        fixed[name] = value

    grids = [np.linspace(mins[k], maxs[k], res[k]) for k in (0, 1)]
    tasks = []
    for j, second in enumerate(grids[1]):
        for i, first in enumerate(grids[0]):
            values = dict(fixed)
            values[axes[0]] = float(first)
            values[axes[1]] = float(second)
            tasks.append((i, j, values, args.n))

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_point, tasks, chunksize=256))
    else:
        rows = [_sweep_point(t) for t in tasks]

    if args.verify:
        rng = np.random.default_rng(args.seed)
        eligible = [k for k, row in enumerate(rows) if row["count"] != ""]
        picked = rng.choice(len(eligible), size=min(args.verify, len(eligible)),
                            replace=False)
        for k in sorted(int(p) for p in picked):
            row = rows[eligible[k]]
            params = Params(row["p1"], row["p2"], row["s1"], row["s2"], args.n)
            found = oracle_mod.oracle_equilibria(params)
            row["oracle_count"] = len(found)
            row["oracle_agrees"] = (len(found) == row["count"])

    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in SWEEP_COLUMNS))
    _emit("\n".join(lines) + "\n", args.out)

    if args.image:
        _write_region_image(args, axes, grids, rows)
    return 0


def _write_region_image(args, axes, grids, rows) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import ListedColormap

    nx, ny = len(grids[0]), len(grids[1])
    code = np.zeros((ny, nx))
    for row in rows:
        base = 0
        if row["q"] >= -eq_mod.TOL_Q_REL:
            base += 1
        if row["q2"] >= -eq_mod.TOL_Q_REL:
            base += 2
        dark = 4 if (base and row["p2s2_class"] == "p2s2_neg") else 0
        code[row["j"], row["i"]] = base + dark

    palette = ListedColormap([
        "#ffffff", "#7fb2e5", "#f2e394", "#8fd18f",
        "#ffffff", "#2d5f9e", "#b09b2a", "#2f7d2f",
    ])
    fig, ax = plt.subplots(figsize=(6, 6))
    mesh = ax.pcolormesh(grids[0], grids[1], code, cmap=palette,
                         vmin=-0.5, vmax=7.5, shading="nearest",
                         rasterized=True)
    ax.set_xlabel(axes[0])
    ax.set_ylabel(axes[1])
    ax.set_title("region diagram: Q>=0 (blue), Q2>=0 (yellow), both (green); "
                 "darker where p2*s2<0")
    fig.savefig(args.image, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# cycle
# ---------------------------------------------------------------------------

def cmd_cycle(args) -> int:
    params = _params_from(args)
    report: dict = {
        "p1": params.p1, "p2": params.p2, "s1": params.s1, "s2": params.s2,
        "n": params.n,
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        code = _cycle_into_report(params, args, report)
        if code:
            _emit(_render(report, args.format), args.out)
            return code

        if args.cont is not None:
            target = {"+": 1e-3, "-": -1e-3}.get(args.cont)
            if target is None:
                try:
                    target = float(args.cont)
                except ValueError:
                    print("--continue expects '+', '-' or a float", file=sys.stderr)
                    return 2
            try:
                moved, cycle = flow_mod.continue_cycle(
                    params, target, section_angle=args.section)
            except AnalysisError as exc:
                report["continued.found"] = f"error: {exc}"
                _emit(_render(report, args.format), args.out)
                return 3
            report["continued.target_q"] = target
            report["continued.p1"] = moved.p1
            report["continued.q"] = eq_mod.quadratic_form(
                moved.p1, moved.p2, moved).value
            if cycle is None:
                report["continued.found"] = False
            else:
                report["continued.found"] = True
                report["continued.fixed_r"] = cycle.fixed_r
                report["continued.multiplier"] = cycle.multiplier
                report["continued.stability"] = cycle.stability
                report["continued.enclosed_equilibria"] = cycle.enclosed_equilibria

    _emit(_render(report, args.format), args.out)
    return 0


# ---------------------------------------------------------------------------
# portrait
# ---------------------------------------------------------------------------

def cmd_portrait(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    params = _params_from(args)
    if not args.out:
        print("--out is required for portrait", file=sys.stderr)
        return 2

    fig, ax = plt.subplots(figsize=(7, 7))
    rng = np.random.default_rng(args.seed)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        equilibria = []
        if abs(params.s2) > 1.0 and (params.p1, params.p2) != (0.0, 0.0):
            try:
                equilibria = eq_mod.all_equilibria(params)
            except AnalysisError:
                equilibria = []

        radius_scale = max([2.0 * eq.state.r for eq in equilibria if eq.state.r > 0],
                           default=1.0)
        radius_scale = max(radius_scale, 1.0)

        # trajectories from rings of initial conditions
        starts = []
        for factor in (0.25, 0.8, 1.8):
            for _ in range(max(1, args.starts // 3)):
                starts.append((factor * radius_scale * (0.8 + 0.4 * rng.random()),
                               2.0 * math.pi * rng.random()))
        for r0, th0 in starts:
            from .field import PolarState
            traj = flow_mod.integrate(params, PolarState(r0, th0), args.horizon,
                                      tol=args.tol or 1e-8,
                                      blowup_radius=(4.0 * radius_scale) ** 2 * 25.0)
            xy = traj.cartesian()
            ax.plot(xy[:, 0], xy[:, 1], lw=0.5, color="#777777", zorder=1)

        # {theta'=0} curve
        if params.p2 * params.s2 < 0.0 and abs(params.s2) > 1.0:
            thetas = np.linspace(0.0, 2.0 * math.pi, 720)
            rc = -params.p2 / (params.s2 + np.sin(2.0 * params.n * thetas))
            m = np.sqrt(np.maximum(rc, 0.0))
            ax.plot(m * np.cos(thetas), m * np.sin(thetas), "--",
                    color="#cc6600", lw=1.0, label="theta'=0", zorder=2)

        # cycle
        if args.cycle:
            cycle = flow_mod.search_limit_cycle(params, section_angle=args.section)
            if cycle is not None:
                m = np.sqrt(cycle.samples[:, 0])
                ax.plot(m * np.cos(cycle.samples[:, 1]),
                        m * np.sin(cycle.samples[:, 1]),
                        color="#aa0000", lw=1.6,
                        label=f"cycle ({cycle.stability})", zorder=4)

        # transversal polygon when on the stratum
        try:
            polygon = flow_mod.build_transversal_polygon(params)
            for (a, b) in polygon.segments:
                ax.plot([a[0], b[0]], [a[1], b[1]], color="#007700", lw=1.2, zorder=3)
            ax.plot([], [], color="#007700", lw=1.2,
                    label=f"barrier (margin {polygon.min_margin:.2e})")
        except AnalysisError:
            pass

        markers = {"saddle-node": ("D", "#9900cc"), "saddle": ("x", "#000000"),
                   "node": ("s", "#0055cc"), "focus": ("o", "#0055cc"),
                   "origin-focus": ("*", "#cc0000"),
                   "center-candidate": ("*", "#00aa55"),
                   "degenerate": ("P", "#888888")}
        seen = set()
        for eq in equilibria:
            m = math.sqrt(eq.state.r)
            marker, color = markers.get(eq.kind, ("o", "#000000"))
            label = eq.kind if eq.kind not in seen else None
            seen.add(eq.kind)
            ax.plot(m * math.cos(eq.state.theta), m * math.sin(eq.state.theta),
                    marker, color=color, ms=7, label=label, zorder=5)

    lim = 2.2 * math.sqrt(radius_scale)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(f"p=({params.p1:g},{params.p2:g}) s=({params.s1:g},{params.s2:g}) n={params.n}")
    fig.savefig(args.out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return 0


# ---------------------------------------------------------------------------
# abel
# ---------------------------------------------------------------------------

def cmd_abel(args) -> int:
    params = _params_from(args)
    report: dict = {}
    try:
        coeffs = abel_mod.abel_coefficients(params)
    except ZeroP2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    lines = ["theta,A,B,C"]
    for k in range(args.samples):
        theta = 2.0 * math.pi * k / args.samples
        lines.append(",".join(_fmt(v) for v in
                              (theta, coeffs.a(theta), coeffs.b(theta), coeffs.c_lin)))
    csv_text = "\n".join(lines) + "\n"

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        v1, v2 = abel_mod.lyapunov_constants(params)
        report["v1"], report["v2"] = v1, v2
        if abs(params.s2) > 1.0:
            cert_a = abel_mod.sign_certificate_A(params)
            cert_b = abel_mod.sign_certificate_B(params)
            report["certificate_A.changes_sign"] = cert_a.changes_sign
            report["certificate_A.criterion"] = cert_a.criterion_value
            report["certificate_B.changes_sign"] = cert_b.changes_sign
            report["certificate_B.criterion"] = cert_b.criterion_value
            report["certificate_B.quadratic_form"] = cert_b.quadratic_form_value
        else:
            report["certificates"] = S2_HYPOTHESIS_MSG

    if args.out:
        with open(args.out, "w") as handle:
            handle.write(csv_text)
        sys.stdout.write(_render(report, args.format))
    else:
        sys.stdout.write(csv_text)
        sys.stdout.write(_render(report, args.format))
    return 0


# ---------------------------------------------------------------------------
# parser plumbing
# ---------------------------------------------------------------------------

def _add_common(sub, with_params=True):
    if with_params:
        sub.add_argument("--p1", type=float, default=None)
        sub.add_argument("--p2", type=float, default=None)
        sub.add_argument("--s1", type=float, default=None)
        sub.add_argument("--s2", type=float, default=None)
    sub.add_argument("--n", type=int, default=2)
    sub.add_argument("--tol", type=float, default=None,
                     help="integrator relative tolerance override")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", type=str, default=None)
    sub.add_argument("--format", choices=("table", "json"), default="table")
    sub.add_argument("--config", type=str, default=None,
                     help="JSON file of flag defaults (flags override)")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="eqcycles",
        description="analysis of the 2n-fold symmetric planar family",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {}

    analyze = subs.add_parser("analyze", help="single-point report")
    _add_common(analyze)
    analyze.add_argument("--cycles", action="store_true",
                         help="also run the limit-cycle search")
    analyze.add_argument("--section", type=float, default=None)
    analyze.set_defaults(func=cmd_analyze)
    registry["analyze"] = analyze

    sweep = subs.add_parser("sweep", help="parameter-plane region sweep")
    _add_common(sweep)
    sweep.add_argument("--axes", type=str, required=True,
                       help="two of p1,p2,s1,s2 (comma separated)")
    sweep.add_argument("--min", type=str, required=True)
    sweep.add_argument("--max", type=str, required=True)
    sweep.add_argument("--res", type=str, default="200")
    sweep.add_argument("--image", type=str, default=None,
                       help="write an SVG region diagram")
    sweep.add_argument("--verify", type=int, default=0, metavar="K",
                       help="run the grid-Newton verifier at K random points")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.set_defaults(func=cmd_sweep)
    registry["sweep"] = sweep

    cycle = subs.add_parser("cycle", help="limit-cycle detection")
    _add_common(cycle)
    cycle.add_argument("--section", type=float, default=None)
    cycle.add_argument("--continue", dest="cont", type=str, default=None,
                       help="move Q to +-1e-3 ('+'/'-') or a given value and re-detect")
    cycle.set_defaults(func=cmd_cycle)
    registry["cycle"] = cycle

    portrait = subs.add_parser("portrait", help="phase portrait (SVG)")
    _add_common(portrait)
    portrait.add_argument("--horizon", type=float, default=30.0)
    portrait.add_argument("--starts", type=int, default=9)
    portrait.add_argument("--cycle", action="store_true",
                          help="overlay the detected limit cycle")
    portrait.add_argument("--section", type=float, default=None)
    portrait.set_defaults(func=cmd_portrait)
    registry["portrait"] = portrait

    abel = subs.add_parser("abel", help="scalar-reduction coefficients")
    _add_common(abel)
    abel.add_argument("--samples", type=int, default=256)
    abel.set_defaults(func=cmd_abel)
    registry["abel"] = abel

    return parser, registry


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()

    # apply --config defaults before the real parse so flags override them
    if "--config" in argv:
        path = argv[argv.index("--config") + 1]
        with open(path) as handle:
            defaults = json.load(handle)
        for sub in registry.values():
            known = {a.dest for a in sub._actions}
            sub.set_defaults(**{k: v for k, v in defaults.items() if k in known})

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except AnalysisError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
