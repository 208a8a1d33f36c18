"""Command-line driver: ``simulate``, ``reconstruct``, ``verify``, ``diagnose``.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 verification failure.
Options may also come from a JSON file (``--config``) whose keys are the
option names with dashes replaced by underscores; command-line flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import diagnose
from .files import dataset_paths, read_covariance, read_dataset, read_state, write_dataset, write_json
from .gaussian import (
    add_thermal_noise,
    displace,
    random_state,
    two_mode_squeezed_state,
    vacuum_state,
)
from .measurement import HomodyneConfig, exact_moment_set, run_schedule
from .optics import measurement_schedule
from .reconstruction import ReconstructionOptions, reconstruct_covariance

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3
VERIFY_THRESHOLD = 1e-10


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="homodyne-cm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = sub.add_parser("simulate", help="sample the quadrature schedule of a Gaussian state")
    p.add_argument("--config", type=Path, help="JSON file with option values")
    p.add_argument("--state", choices=["vacuum", "tmss", "custom"], default="tmss")
    p.add_argument("--r", type=float, default=0.5, help="two-mode squeezing parameter")
    p.add_argument("--nbar-a", type=float, default=0.0, help="thermal photons added to mode a")
    p.add_argument("--nbar-b", type=float, default=0.0, help="thermal photons added to mode b")
    p.add_argument("--mean", type=float, nargs=4, default=None, metavar="X", help="displacement (q_a p_a q_b p_b)")
    p.add_argument("--state-file", type=Path, help="JSON state {'mean': [...], 'cov': [[...]]} for --state custom")
    p.add_argument("--samples", type=int, default=10_000, help="samples per quadrature")
    p.add_argument("--efficiency", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-f", action="store_true", help="also measure f:x and f:y")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="output stem; writes <out>.csv and <out>.meta.json")
    p.set_defaults(func=cmd_simulate)
    subs["simulate"] = p

    p = sub.add_parser("reconstruct", help="reconstruct the covariance matrix from a dataset CSV")
    p.add_argument("dataset", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--meta", type=Path, help="metadata sidecar (default <stem>.meta.json if present)")
    p.add_argument("--f-policy", choices=["e_only", "average_ef"], default="e_only")
    p.add_argument("--correct-efficiency", action="store_true")
    p.add_argument("--efficiency", type=float, default=None, help="override the recorded efficiency")
    p.add_argument("--project", action="store_true", help="also report the nearest-physical projection")
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap resamples (0 disables)")
    p.add_argument("--out", type=Path, help="result JSON (default <stem>.result.json)")
    p.add_argument("--report", action="store_true", help="print a table of sigma entries +- stderr")
    p.add_argument("--emit-gnuplot", type=Path, help="write a whitespace-delimited table of sigma entries")
    p.set_defaults(func=cmd_reconstruct)
    subs["reconstruct"] = p

    p = sub.add_parser("verify", help="check exact reconstruction on random states")
    p.add_argument("--config", type=Path)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--state", choices=["random", "vacuum"], default="random")
    p.add_argument("--include-f", action="store_true")
    p.add_argument("--f-policy", choices=["e_only", "average_ef"], default="e_only")
    p.set_defaults(func=cmd_verify)
    subs["verify"] = p

    p = sub.add_parser("diagnose", help="purity, PPT eigenvalue, log-negativity and EPR variance")
    p.add_argument("sigma", type=Path, help="state JSON ('cov') or result JSON ('sigma')")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_diagnose)
    subs["diagnose"] = p
    return parser, subs


def _apply_config(args, subparser) -> None:
    if args.config is None:
        return
    cfg = json.loads(args.config.read_text())
    if not isinstance(cfg, dict):
        raise UsageError(f"{args.config}: config must be a JSON object")
    known = {a.dest for a in subparser._actions} - {"help", "config", "func"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"{args.config}: unknown config key(s): {', '.join(unknown)}")
    subparser.set_defaults(**cfg)


def _state_from_args(args):
    if args.state == "vacuum":
        state = vacuum_state()
    elif args.state == "tmss":
        state = two_mode_squeezed_state(args.r)
    else:
        if args.state_file is None:
            raise UsageError("--state custom requires --state-file")
        state = read_state(args.state_file)
    if args.nbar_a or args.nbar_b:
        state = add_thermal_noise(state, args.nbar_a, args.nbar_b)
    if args.mean is not None:
        state = displace(state, args.mean)
    return state


def cmd_simulate(args) -> int:
    state = _state_from_args(args)
    config = HomodyneConfig(args.samples, args.efficiency, args.seed)
    schedule = measurement_schedule(args.include_f)
    provenance = {"kind": args.state, "state": state.to_dict()}
    if args.state == "tmss":
        provenance["r"] = args.r
    dataset = run_schedule(state, schedule, config, workers=args.workers, provenance=provenance)
    csv_path, meta_path = write_dataset(dataset, args.out)
    print(f"wrote {csv_path} ({len(schedule)} settings x {args.samples} samples) and {meta_path}")
    return EXIT_OK


def format_report(result) -> str:
    names = ["q_a", "p_a", "q_b", "p_b"]
    lines = [f"{'entry':<12}{'sigma':>14}{'stderr':>14}"]
    for i in range(4):
        for j in range(i, 4):
            lines.append(
                f"{names[i] + ',' + names[j]:<12}{result.covariance[i, j]:>14.6f}{result.stderr[i, j]:>14.6f}"
            )
    lines.append(
        f"min symplectic eigenvalue {result.min_symplectic_eig:.6f} +- {result.min_symplectic_eig_stderr:.6f}"
        f" ({'physical' if result.physical else 'UNPHYSICAL'})"
    )
    return "\n".join(lines)


def _write_gnuplot(result, path: Path) -> None:
    rows = ["# i j sigma stderr"]
    for i in range(4):
        for j in range(4):
            rows.append(f"{i + 1} {j + 1} {float(result.covariance[i, j])!r} {float(result.stderr[i, j])!r}")
    path.write_text("\n".join(rows) + "\n")


def cmd_reconstruct(args) -> int:
    dataset = read_dataset(args.dataset, args.meta, args.efficiency)
    options = ReconstructionOptions(
        f_policy=args.f_policy,
        correct_efficiency=args.correct_efficiency,
        project_to_physical=args.project,
        bootstrap=args.bootstrap,
    )
    result = reconstruct_covariance(dataset, options)
    out = result.to_dict()
    out["diagnostics"] = diagnose(result.covariance).to_dict()
    if result.projected is not None:
        out["projected_diagnostics"] = diagnose(result.projected).to_dict()
    out_path = args.out or dataset_paths(args.dataset)[0].with_suffix(".result.json")
    write_json(out, out_path)
    if args.emit_gnuplot:
        _write_gnuplot(result, args.emit_gnuplot)
    if args.report:
        print(format_report(result))
    print(f"wrote {out_path}")
    return EXIT_OK


def verify_exact(trials: int, seed: int, state_kind: str = "random", include_f: bool = False, f_policy: str = "e_only") -> float:
    """Largest entrywise error of reconstruction from exact moments over ``trials`` states."""
    if trials < 1:
        raise UsageError("--trials must be at least 1")
    rng = np.random.default_rng(seed)
    schedule = measurement_schedule(include_f or f_policy != "e_only")
    options = ReconstructionOptions(f_policy=f_policy)
    worst = 0.0
    for _ in range(trials):
        state = vacuum_state() if state_kind == "vacuum" else random_state(rng)
        result = reconstruct_covariance(exact_moment_set(state, schedule), options)
        worst = max(worst, float(np.max(np.abs(result.covariance - state.cov))))
    return worst


def cmd_verify(args) -> int:
    err = verify_exact(args.trials, args.seed, args.state, args.include_f, args.f_policy)
    ok = err < VERIFY_THRESHOLD
    print(f"max error {err:.3g}, {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_diagnose(args) -> int:
    report = diagnose(read_covariance(args.sigma)).to_dict()
    text = json.dumps(report, indent=2)
    if args.out:
        args.out.write_text(text + "\n")
    print(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser, subs = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None) is not None:
            _apply_config(args, subs[args.command])
            args = parser.parse_args(argv)
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
