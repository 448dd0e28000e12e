"""Command line entry point: ``piezobeam {run,converge,sweep,check}``.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 failed check.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .integrator import IntegratorError
from .scenario import ConfigError, convergence_study, load_config, run_scenario, sweep

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4


def _common(p: argparse.ArgumentParser, out_default: str | None) -> None:
    p.add_argument("--config", type=Path, help="YAML scenario file (empty: sample-beam defaults)")
    p.add_argument("--out", type=Path, default=out_default, help="output directory")
    p.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted key override, e.g. controller.mode=Partial (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="piezobeam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one scenario and write CSV/JSON outputs")
    _common(p, None)

    p = sub.add_parser("converge", help="manufactured-solution refinement study")
    _common(p, None)
    p.add_argument("--kind", choices=("space", "time"), default="space")
    p.add_argument("--levels", required=True, help="comma-separated grid sizes, or step sizes then a reference step")
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=5e-4, help="step size for space studies")
    p.add_argument("--N", type=int, default=32, help="grid size for time studies")

    p = sub.add_parser("sweep", help="grid search over the feedback gains")
    _common(p, None)
    p.add_argument("--values", default="0.1,1,10")
    p.add_argument("--t-final", type=float, default=None)

    p = sub.add_parser("check", help="run the acceptance checks")
    p.add_argument("keys", nargs="*", help="criteria to run (default: all)")
    p.add_argument("--quick", action="store_true", help="skip the multi-minute criteria")
    return parser


def _write_json(obj, out: Path | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out is None:
        print(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(text + "\n")
    print(f"wrote {out / 'report.json'}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        from .checks import CHECKS, SLOW, all_passed, run_checks

        keys = args.keys or [k for k in CHECKS if not (args.quick and k in SLOW)]
        try:
            results = run_checks(keys)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK if all_passed(results) else EXIT_CHECK

    try:
        cfg = load_config(args.config, args.override)
        if args.command == "run":
            out = args.out if args.out is not None else (Path(cfg.output_dir) if cfg.output_dir else Path("run_output"))
            rec = run_scenario(cfg, out)
            print(f"wrote {out}; E(T)/E(0) = {rec.summary['ratio_total']:.6e}")
            if not rec.complete:
                print(f"solver failure: {rec.error}", file=sys.stderr)
                return EXIT_SOLVER
        elif args.command == "converge":
            levels = _floats(args.levels)
            if args.kind == "space":
                levels = [int(v) for v in levels]
            rep = convergence_study(cfg, levels, args.kind, t_final=args.t_final, dt=args.dt, N=args.N)
            _write_json(rep.as_dict(), args.out)
            if not rep.result.conclusive:
                print("warning: non-monotone errors, order inconclusive", file=sys.stderr)
        elif args.command == "sweep":
            rows = sweep(cfg, _floats(args.values), args.t_final)
            _write_json(rows, args.out)
    except IntegratorError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:  # ConfigError, bad study levels, invalid grids
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
