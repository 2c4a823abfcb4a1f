"""Command line entry point.

Exit codes: 0 on success, 1 when an invariant or ordering check fails,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .experiments import (
    ConfigError,
    ExperimentConfig,
    run_harness_hydro_experiment,
    run_hydro_experiment,
    run_invariant_experiment,
    run_stationary_experiment,
)
from .harness import HarnessState, delta_harness_sandwich, harness_evolve, traveling_wave
from .interface import centered_evolve, coupled_delta_sandwich, evolve_uncentered
from .io import dumps_json, write_json, write_profile
from .lattice import Interface, ParticleConfig, dumps_interface, dumps_particles, loads_particles, median
from .macro import MacroDensity, MacroInterface, delta_evolve, delta_interface_evolve, stationary_profile
from .particle import simulate_centered, simulate_particle

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(args, name: str, summary: dict) -> None:
    out = Path(args.out)
    write_json(out / f"{name}.json", summary)
    print(dumps_json(summary))


def _common(p: argparse.ArgumentParser, seed: int | None = 0, out: str | None = "out") -> None:
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", default=out, help="output directory")


def _cmd_particle(args) -> int:
    eta0 = loads_particles(args.init) if args.init else ParticleConfig.heaviside(1)
    if args.centered:
        tr = simulate_centered(eta0, args.j, args.t, args.seed)
    else:
        tr = simulate_particle(eta0, args.j, args.t, args.seed)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    tr.to_csv(Path(args.out) / "particle.csv")
    _emit(
        args,
        "particle",
        {
            "version": __version__,
            "seed": args.seed,
            "J": args.j,
            "T": args.t,
            "centered": args.centered,
            "initial": dumps_particles(eta0),
            "final": dumps_particles(tr.final),
            "A": tr.A,
            "B": tr.B,
            "n_events": tr.n_events,
            "median_violations": tr.median_violations,
            "final_median": median(tr.final),
        },
    )
    return EXIT_OK


def _cmd_interface(args) -> int:
    xi0 = Interface.cone(0, 0)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    summary = {"version": __version__, "seed": args.seed, "J": args.j, "T": args.t, "mode": args.mode}
    if args.mode == "sandwich":
        b = coupled_delta_sandwich(xi0, args.j, args.delta, args.t, args.seed, strict=False, inject_fault=args.inject_fault)
        summary.update(
            delta=args.delta,
            violations=b.violations,
            first_violation=b.first_violation,
            finals={lab: dumps_interface(f) for lab, f in zip(b.labels, b.final)},
        )
        _emit(args, "interface", summary)
        return EXIT_INVARIANT if b.violations else EXIT_OK
    if args.mode == "centered":
        run = centered_evolve(xi0, args.j, args.t, args.seed, record=True)
        bundle = run.bundle
    else:
        run = evolve_uncentered(xi0, args.j, args.t, args.seed, record=True)
        bundle = run.bundle
    bundle.to_csv(Path(args.out) / "interface.csv")
    summary.update(
        final=dumps_interface(run.final),
        vertex_violations=bundle.vertex_violations,
        n_flips=bundle.n_flips,
    )
    _emit(args, "interface", summary)
    return EXIT_INVARIANT if bundle.vertex_violations else EXIT_OK


def _cmd_macro(args) -> int:
    if args.profile == "stationary":
        rho0, phi0 = stationary_profile(args.j, args.h)
    else:
        rho0, phi0 = MacroDensity.heaviside(args.h), MacroInterface.cone(0.0, args.h)
    out = Path(args.out)
    if args.kind == "density":
        tr = delta_evolve(rho0, args.j, args.delta, args.t, args.sign)
        f = tr.profiles[-1]
        write_profile(out / "density.csv", f.xs, f.ys, "rho")
        summary = {"left": f.left, "right": f.right}
    else:
        tr = delta_interface_evolve(phi0, args.j, args.delta, args.t, args.sign)
        f = tr.profiles[-1]
        write_profile(out / "interface.csv", f.xs, f.ys, "phi")
        summary = {"c": f.c, "phi0": f(0.0)}
    summary.update(version=__version__, j=args.j, delta=args.delta, T=args.t, sign=args.sign, kind=args.kind)
    _emit(args, "macro", summary)
    return EXIT_OK


def _cmd_harness(args) -> int:
    K0 = traveling_wave(args.j) if args.init == "wave" else HarnessState.cone()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"version": __version__, "J": args.j, "steps": args.steps, "init": args.init}
    if args.delta_steps:
        s = delta_harness_sandwich(K0, args.j, args.delta_steps, args.steps, strict=False)
        s.exact.to_csv(out / "harness.csv")
        bound = 2.0 * args.j * args.delta_steps
        summary.update(delta_steps=args.delta_steps, max_gap=s.max_gap, gap_bound=bound, order_defect=s.order_defect)
        _emit(args, "harness", summary)
        return EXIT_INVARIANT if s.order_defect > 1e-12 else EXIT_OK
    K = harness_evolve(K0, args.j, args.steps)
    K.to_csv(out / "harness.csv")
    summary.update(K0=K(0), c=K.c, window=[K.L, K.R])
    _emit(args, "harness", summary)
    return EXIT_OK


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(name=args.which)
    over = {"name": args.which}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    else:
        args.out = cfg.out
    if args.j is not None:
        if args.which == "invariant":
            over["J_list"] = [args.j]
        else:
            over["j"] = args.j
    for key in ("delta", "t", "replicas", "workers"):
        v = getattr(args, key)
        if v is not None:
            # the stationary run evolves up to the horizon T
            over["T" if key == "t" and args.which == "stationary" else key] = v
    if args.eps:
        over["eps"] = args.eps
    cfg = replace(cfg, **over)
    return cfg


def _cmd_experiment(args) -> int:
    cfg = _config(args)
    if args.which == "hydro":
        rep = run_hydro_experiment(cfg)
        _emit(args, "hydro", rep.to_dict())
        return EXIT_INVARIANT if any(rep.sandwich_violations) or rep.nesting_defect > cfg.tol else EXIT_OK
    if args.which == "invariant":
        _emit(args, "invariant", run_invariant_experiment(cfg))
    elif args.which == "stationary":
        _emit(args, "stationary", run_stationary_experiment(cfg))
    else:
        _emit(args, "harness_hydro", run_harness_hydro_experiment(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freessep", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate-particle", help="exact-event particle simulation")
    _common(sp)
    sp.add_argument("--j", type=float, default=0.5)
    sp.add_argument("--t", type=float, default=10.0)
    sp.add_argument("--init", help="initial configuration as 'start:bits'")
    sp.add_argument("--centered", action="store_true")
    sp.set_defaults(func=_cmd_particle)

    si = sub.add_parser("simulate-interface", help="Harris-construction interface runs")
    _common(si)
    si.add_argument("--j", type=float, default=0.5)
    si.add_argument("--t", type=float, default=10.0)
    si.add_argument("--delta", type=float, default=1.0)
    si.add_argument("--mode", choices=["uncentered", "centered", "sandwich"], default="uncentered")
    si.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    si.set_defaults(func=_cmd_interface)

    sm = sub.add_parser("macro-evolve", help="macroscopic delta evolution")
    _common(sm)
    sm.add_argument("--j", type=float, default=1.0)
    sm.add_argument("--delta", type=float, default=0.01)
    sm.add_argument("--t", type=float, default=1.0)
    sm.add_argument("--h", type=float, default=1e-3)
    sm.add_argument("--sign", choices=["-", "+"], default="-")
    sm.add_argument("--kind", choices=["density", "interface"], default="interface")
    sm.add_argument("--profile", choices=["stationary", "heaviside"], default="stationary")
    sm.set_defaults(func=_cmd_macro)

    sh = sub.add_parser("harness", help="deterministic harness process")
    _common(sh)
    sh.add_argument("--j", type=float, default=0.05, help="rate J of the rising cone")
    sh.add_argument("--steps", type=int, default=100)
    sh.add_argument("--delta-steps", type=int, default=0)
    sh.add_argument("--init", choices=["wave", "cone"], default="wave")
    sh.set_defaults(func=_cmd_harness)

    se = sub.add_parser("experiment", help="micro/macro experiments")
    se.add_argument("which", choices=["hydro", "invariant", "stationary", "harness-hydro"])
    _common(se, seed=None, out=None)
    se.add_argument("--config", help="JSON config file")
    se.add_argument("--j", type=float)
    se.add_argument("--delta", type=float)
    se.add_argument("--eps", type=float, nargs="+")
    se.add_argument("--t", type=float)
    se.add_argument("--replicas", type=int)
    se.add_argument("--workers", type=int)
    se.set_defaults(func=_cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
