"""``lorentzlab`` command line: run, converge, resume, heatmap, verify."""
from __future__ import annotations

import argparse
import sys

from ..field import Boundary
from ..solver import Status
from .config import ConfigError, parse_config
from .runner import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, EXIT_VERIFY, resume, run_scenario
from .snapshot import SnapshotFormatError


def _summary(r) -> str:
    drift = r.column("energy_drift")
    worst = float(abs(drift).max()) if drift.size else float("nan")
    return (f"{r.scenario.name}: {r.status.value}, {r.steps} steps, dt={r.dt:.4g}, "
            f"max |energy drift|={worst:.3e}, wall {r.wall_time:.1f}s -> {r.out_dir}")


def cmd_run(args) -> int:
    s = parse_config(args.config)
    if args.out:
        s = s.with_values(**{"outputs.dir": args.out})
    if s.is_convergence:
        raise ConfigError("config has model.epsilon_list; use the converge verb", "mode")
    r = run_scenario(s)
    print(_summary(r))
    return r.exit_code


def cmd_converge(args) -> int:
    from .convergence import convergence_study, ripple_study

    s = parse_config(args.config)
    if args.out:
        s = s.with_values(**{"outputs.dir": args.out})
    if not s.is_convergence:
        raise ConfigError("converge needs model.epsilon_list", "mode")
    if s["ripples.wavelength_list"] is not None:
        rep = ripple_study(s)
        print((s.output_dir / "ripples_report.txt").read_text(), end="")
        statuses = [r["status"] for r in rep.rows]
    else:
        rep = convergence_study(s)
        print(rep.text(), end="")
        statuses = rep.status
    return EXIT_OK if all(st == Status.COMPLETED.value for st in statuses) else EXIT_DIVERGED


def cmd_resume(args) -> int:
    r = resume(args.checkpoint, args.out)
    print(_summary(r))
    return r.exit_code


def cmd_heatmap(args) -> int:
    from .heatmap import UsageError, emit_heatmap

    try:
        path = emit_heatmap(args.snapshot, args.field, args.out, Boundary(args.boundary))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(path)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    checks = run_checks()
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lorentzlab", description="Semilinear wave interface laboratory.")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run a single-epsilon scenario")
    r.add_argument("config")
    r.add_argument("--out", help="override outputs.dir")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("converge", help="run an epsilon sequence and report trends")
    c.add_argument("config")
    c.add_argument("--out", help="override outputs.dir")
    c.set_defaults(func=cmd_converge)
    z = sub.add_parser("resume", help="continue a run from a checkpoint file")
    z.add_argument("checkpoint")
    z.add_argument("--out", help="write artifacts here instead of the original directory")
    z.set_defaults(func=cmd_resume)
    h = sub.add_parser("heatmap", help="16-bit PGM of one field of an n=2 snapshot")
    h.add_argument("snapshot")
    h.add_argument("--field", required=True, choices=("e", "l", "w", "u0", "u1", "abs_u"))
    h.add_argument("--out", help="output path stem")
    h.add_argument("--boundary", default="periodic", choices=[b.value for b in Boundary],
                   help="boundary assumed for derivative stencils (snapshots do not store it)")
    h.set_defaults(func=cmd_heatmap)
    v = sub.add_parser("verify", help="run the built-in identity and exact-solution checks")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SnapshotFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
