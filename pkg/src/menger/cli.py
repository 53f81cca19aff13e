"""Command-line front door.

Subcommands: energy, classify, converge, strands, grad, flow, seminorm,
symbol, check.  Reports are schema-stable JSON on stdout; bulk artifacts
(history CSV, snapshots, tables) go to --out.  Exit codes: 0 success,
1 usage/validation error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _configure_threads(value: str | None) -> None:
    # Kernels are vectorized numpy; thread caps are delegated to the BLAS/OMP
    # runtime, which honors these variables.
    threads = value or os.environ.get("MENGER_THREADS")
    if threads and threads != "auto":
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(int(threads))


def _add_common(parser, curve=False, params=False):
    parser.add_argument("--out", default=None, help="output directory for bulk artifacts")
    parser.add_argument("--deterministic", action="store_true", default=True,
                        help="fixed-order reductions (always on; flag kept for scripts)")
    parser.add_argument("--threads", default=None, help="cap kernel threads (or MENGER_THREADS)")
    if params:
        parser.add_argument("--p", type=float, required=True)
        parser.add_argument("--q", type=float, required=True)
    if curve:
        parser.add_argument("--preset", default=None,
                            help="circle | ellipse[:aspect] | torus_knot:a,b | polygon:k | perturbed_circle:eps,seed")
        parser.add_argument("--input", default=None, help="curve file (.json or .csv)")
        parser.add_argument("--N", type=int, default=64, help="vertex count for presets")
        parser.add_argument("--dim", type=int, default=2, choices=(2, 3))


def _load_curve(args):
    from . import geometry

    if (args.preset is None) == (args.input is None):
        raise SystemExit(_fail("exactly one of --preset/--input is required"))
    if args.input is not None:
        curve = geometry.load_curve(args.input)
        if not curve.is_arclength:
            curve = geometry.resample_arclength(curve, curve.N)
        return curve
    return geometry.parse_preset(args.preset, args.N, args.dim)


def _fail(message: str) -> int:
    sys.stderr.write(f"error: {message}\n")
    return 1


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _warn_regime(params) -> None:
    if not params.is_subcritical():
        label = params.range_class.label.value
        sys.stderr.write(
            f"warning: (p={params.p}, q={params.q}) is outside the sub-critical range "
            f"({label}); results are exploratory\n"
        )


def _write_table(path, header, rows):
    import csv as _csv

    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# -- subcommand bodies ---------------------------------------------------------


def _cmd_classify(args):
    from .energy import classify

    rc = classify(args.p, args.q)
    _emit({"label": rc.label.value, "detail": rc.detail, "p": args.p, "q": args.q})
    return 0


def _cmd_energy(args):
    from .energy import EnergyParams, QuadratureSpec, energy_decomposed, energy_full

    params = EnergyParams(args.p, args.q)
    curve = _load_curve(args)
    spec = QuadratureSpec(deterministic_reduction=args.deterministic)
    fn = energy_decomposed if args.decomposed else energy_full
    report = fn(curve, params, spec)
    _emit(
        {
            "value": report.value,
            "N": report.N,
            "p": args.p,
            "q": args.q,
            "class": params.range_class.label.value,
            "decomposition_used": report.decomposition_used,
        }
    )
    return 0


def _cmd_converge(args):
    from .energy import EnergyParams, energy_convergence

    params = EnergyParams(args.p, args.q)
    Ns = [int(v) for v in args.Ns.split(",")]
    table = energy_convergence(args.preset or "circle", params, Ns, dim=args.dim)
    if args.out:
        _write_table(
            os.path.join(args.out, "convergence.csv"),
            ["N", "energy"],
            [[r.N, r.value] for r in table.rows],
        )
    _emit(
        {
            "Ns": [r.N for r in table.rows],
            "energies": [r.value for r in table.rows],
            "slope": table.slope,
            "last_rel_change": table.last_rel_change,
            "p": args.p,
            "q": args.q,
            "class": params.range_class.label.value,
        }
    )
    return 0


def _cmd_strands(args):
    import numpy as np

    from .energy import EnergyParams, strand_pair_experiment

    params = EnergyParams(args.p, args.q)
    deltas = [float(v) for v in args.deltas.split(",")]
    values = [strand_pair_experiment(d, params, args.N) for d in deltas]
    report = {"deltas": deltas, "values": values, "p": args.p, "q": args.q}
    if len(deltas) >= 2:
        report["slope"] = float(np.polyfit(np.log(deltas), np.log(values), 1)[0])
    _emit(report)
    return 0


def _cmd_grad(args):
    from .energy import EnergyParams
    from .variation import discrete_gradient, projected_gradient

    params = EnergyParams(args.p, args.q)
    _warn_regime(params)
    curve = _load_curve(args)
    pg = projected_gradient(curve, params)
    report = {"residual": pg.residual, "lambda": pg.lam}
    if args.fd_check:
        import numpy as np

        from .energy import _energy_of_vertices

        g = discrete_gradient(curve, params).vectors / curve.N
        X = curve.vertices
        step = 1e-5
        worst = 0.0
        scale = float(np.max(np.abs(g)))
        for i in range(curve.N):
            for axis in range(curve.dim):
                probe = np.zeros_like(X)
                probe[i, axis] = step
                fd = (_energy_of_vertices(X + probe, params) - _energy_of_vertices(X - probe, params)) / (2 * step)
                worst = max(worst, abs(fd - g[i, axis]) / max(abs(g[i, axis]), 1e-3 * scale))
        report["max_fd_error"] = worst
    if args.out:
        _write_table(
            os.path.join(args.out, "gradient.csv"),
            [f"g{ax}" for ax in "xyz"[: curve.dim]],
            pg.field.vectors.tolist(),
        )
    _emit(report)
    return 0


def _cmd_flow(args):
    from .energy import EnergyParams
    from .flow import FlowConfig, run_flow

    params = EnergyParams(args.p, args.q)
    _warn_regime(params)
    curve = _load_curve(args)
    config = FlowConfig(
        params=params,
        max_steps=args.steps,
        initial_step=args.step_size,
        armijo_c=args.armijo_c,
        backtrack_factor=args.backtrack_factor,
        resample_every=args.resample_every,
        guard_distance_factor=args.guard_factor,
        residual_tol=args.tol,
        snapshot_every=args.snapshot_every,
    )
    result = run_flow(curve, config, output_dir=args.out)
    _emit(
        {
            "steps": result.state.step_index,
            "energy": result.state.energy,
            "residual": result.state.residual,
            "lambda": result.state.lam,
            "guard_trips": result.state.guard_trips,
            "terminated": result.state.terminated,
        }
    )
    return 0


def _cmd_seminorm(args):
    from .sobolev import SeminormSpec, equivalence_check, seminorm_first, seminorm_second

    curve = _load_curve(args)
    report = {"s": args.s, "rho": args.rho, "variant": args.variant}
    if args.variant in ("first", "both"):
        report["value"] = seminorm_first(curve, SeminormSpec(args.s, args.rho, "first_difference"))
    if args.variant in ("second", "both"):
        value2 = seminorm_second(curve, SeminormSpec(args.s, args.rho, "second_difference"))
        report["value" if args.variant == "second" else "value_second"] = value2
    if args.variant == "both":
        eq = equivalence_check(curve, SeminormSpec(args.s, args.rho))
        report["ratio"] = eq.ratio
        report["interval"] = [eq.lower, eq.upper]
        report["within_slack"] = eq.within_slack
    _emit(report)
    return 0


def _cmd_symbol(args):
    from .symbol import rho_asymptotic, tilde_rho

    ks = [int(v) for v in args.ks.split(",")]
    table = rho_asymptotic(args.p, ks)
    tr = [tilde_rho(args.p, args.lam, k) for k in ks]
    if args.out:
        _write_table(
            os.path.join(args.out, "symbol.csv"),
            ["k", "rho", "scaled", "tilde_rho"],
            [[k, r, s, t] for k, r, s, t in zip(table.ks, table.rho, table.scaled, tr)],
        )
    _emit(
        {
            "p": args.p,
            "ks": list(table.ks),
            "plateau": table.plateau,
            "slope": table.slope,
            "deviation": table.deviation,
        }
    )
    return 0


def _cmd_check(args):
    return check_suite(fast=args.fast)


def check_suite(fast: bool = False) -> int:
    """Small-N invariant battery across every module; exit 0 iff all pass."""
    import numpy as np

    from .energy import EnergyParams, energy_decomposed, energy_full
    from .geometry import make_preset
    from .sobolev import SeminormSpec, equivalence_check
    from .symbol import rho_asymptotic
    from .variation import discrete_gradient, projected_gradient
    from .energy import _energy_of_vertices

    scale = 2 if fast else 1
    params = EnergyParams(2.5, 2.0)
    checks = []

    def decomposition():
        curve = make_preset("perturbed_circle", 32 // scale, 3, eps=0.08, seed=1)
        full = energy_full(curve, params).value
        deco = energy_decomposed(curve, params).value
        err = abs(full - deco) / full
        return err <= 1e-12, f"rel diff {err:.2e}"

    def fd_gradient():
        curve = make_preset("perturbed_circle", 16, 3, eps=0.05, seed=2)
        g = discrete_gradient(curve, params).vectors / curve.N
        X = curve.vertices
        rng = np.random.default_rng(0)
        worst = 0.0
        gmax = float(np.max(np.abs(g)))
        for i, axis in zip(rng.integers(0, curve.N, 6), rng.integers(0, curve.dim, 6)):
            probe = np.zeros_like(X)
            probe[i, axis] = 1e-5
            fd = (_energy_of_vertices(X + probe, params) - _energy_of_vertices(X - probe, params)) / 2e-5
            worst = max(worst, abs(fd - g[i, axis]) / max(abs(g[i, axis]), 1e-3 * gmax))
        return worst <= 1e-6, f"max fd err {worst:.2e}"

    def circle_criticality():
        curve = make_preset("circle", 64 // scale, 2)
        pg = projected_gradient(curve, params)
        ref = discrete_gradient(curve, params).sup_norm
        ratio = pg.residual / ref
        return ratio <= 1e-3, f"residual/|g| {ratio:.2e}"

    def seminorm_interval():
        curve = make_preset("circle", 256 // scale, 2)
        eq = equivalence_check(curve, SeminormSpec(0.5, 2.0))
        return eq.within_slack, f"ratio {eq.ratio:.3f} in [{eq.lower:.3f}, {eq.upper:.3f}]"

    def symbol_slope():
        table = rho_asymptotic(2.5, (8, 16, 32) if not fast else (4, 8, 16))
        err = abs(table.slope - 3.5)
        return err <= 0.05, f"slope {table.slope:.3f} vs 3.5"

    checks = [
        ("decomposition exactness", decomposition),
        ("finite-difference gradient", fd_gradient),
        ("circle criticality", circle_criticality),
        ("seminorm equivalence interval", seminorm_interval),
        ("symbol growth exponent", symbol_slope),
    ]
    failures = 0
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - report, don't crash the table
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - t0
        status = "PASS" if ok else "FAIL"
        print(f"{status:4s}  {name:32s} {detail}  ({elapsed:.1f}s)")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 2


# -- dispatch ------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="menger", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_classify = sub.add_parser("classify", help="parameter-regime label for (p, q)")
    _add_common(p_classify, params=True)
    p_classify.set_defaults(fn=_cmd_classify)

    p_energy = sub.add_parser("energy", help="evaluate the energy of a curve")
    _add_common(p_energy, curve=True, params=True)
    p_energy.add_argument("--decomposed", action="store_true", help="use the 6-fold domain decomposition")
    p_energy.set_defaults(fn=_cmd_energy)

    p_conv = sub.add_parser("converge", help="refinement study over a preset family")
    _add_common(p_conv, curve=True, params=True)
    p_conv.add_argument("--Ns", default="64,128,256,512", help="comma-separated grid sizes")
    p_conv.set_defaults(fn=_cmd_converge)

    p_str = sub.add_parser("strands", help="two-strand interaction energy vs gap")
    _add_common(p_str, params=True)
    p_str.add_argument("--deltas", default="0.1,0.03,0.01,0.003")
    p_str.add_argument("--N", type=int, default=1024)
    p_str.set_defaults(fn=_cmd_strands)

    p_grad = sub.add_parser("grad", help="projected gradient diagnostics")
    _add_common(p_grad, curve=True, params=True)
    p_grad.add_argument("--fd-check", action="store_true", help="compare against finite differences (slow)")
    p_grad.set_defaults(fn=_cmd_grad)

    p_flow = sub.add_parser("flow", help="length-constrained gradient descent")
    _add_common(p_flow, curve=True, params=True)
    p_flow.add_argument("--steps", type=int, default=500)
    p_flow.add_argument("--step-size", type=float, default=0.05, dest="step_size")
    p_flow.add_argument("--tol", type=float, default=1e-3)
    p_flow.add_argument("--armijo-c", type=float, default=1e-4, dest="armijo_c")
    p_flow.add_argument("--backtrack-factor", type=float, default=0.5, dest="backtrack_factor")
    p_flow.add_argument("--resample-every", type=int, default=10, dest="resample_every")
    p_flow.add_argument("--guard-factor", type=float, default=0.2, dest="guard_factor")
    p_flow.add_argument("--snapshot-every", type=int, default=50, dest="snapshot_every")
    p_flow.set_defaults(fn=_cmd_flow)

    p_semi = sub.add_parser("seminorm", help="fractional seminorms of a curve")
    _add_common(p_semi, curve=True)
    p_semi.add_argument("--s", type=float, required=True)
    p_semi.add_argument("--rho", type=float, default=2.0)
    p_semi.add_argument("--variant", choices=("first", "second", "both"), default="both")
    p_semi.set_defaults(fn=_cmd_seminorm)

    p_sym = sub.add_parser("symbol", help="Fourier symbol table and asymptotics")
    _add_common(p_sym)
    p_sym.add_argument("--p", type=float, required=True)
    p_sym.add_argument("--ks", default="8,16,32,64")
    p_sym.add_argument("--lambda", type=float, default=0.0, dest="lam")
    p_sym.set_defaults(fn=_cmd_symbol)

    p_check = sub.add_parser("check", help="run the cross-module invariant battery")
    _add_common(p_check)
    p_check.add_argument("--fast", action="store_true", help="halve grid sizes")
    p_check.set_defaults(fn=_cmd_check)

    return parser


def main(argv=None) -> int:
    from .errors import MengerError, QuadratureNotConverged, StepFailure

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_threads(getattr(args, "threads", None))
    try:
        return args.fn(args)
    except (StepFailure, QuadratureNotConverged) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return 2
    except MengerError as exc:
        return _fail(str(exc))
    except ValueError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
