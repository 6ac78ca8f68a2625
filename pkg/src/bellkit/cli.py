"""Command-line interface.

Subcommands: generate, analyze, simulate, estimate, membership, gap, sweep.
Exit codes: 0 analysis completed (whatever the physics says), 2 input or
usage error, 3 LP failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .core import (
    Behavior,
    BellkitError,
    EmpiricalBehavior,
    SchemaError,
    behavior_file_kind,
    dump_behavior,
    load_behavior,
    load_empirical,
)
from .feasibility import local_membership, min_invariance_gap, min_tv_separation
from .bell import ChshPermutation, gap_lower_bound
from .generators import (
    QuantumSetup,
    dice_behavior,
    lhv_behavior,
    load_lhv_model,
    maximally_correlated_state,
    pr_box,
    quantum_behavior,
    singlet_state,
    tsirelson_setup,
)
from .runner import (
    Dataset,
    analyze,
    estimate_behavior,
    report_to_json,
    report_to_text,
    simulate_runs,
    sweep,
    sweep_to_csv,
)
from .simplex import LPFailureError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_LP = 3


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _angles(spec: str) -> tuple[float, ...]:
    try:
        return tuple(math.radians(float(v)) for v in spec.split(","))
    except ValueError:
        raise SchemaError(f"angle list must be comma-separated degrees, got {spec!r}")


def _parse_perm(spec: str) -> ChshPermutation:
    parts = spec.split(",")
    if len(parts) not in (4, 5):
        raise SchemaError("permutation must be 'xA,xA2,yB,yB2[,swap]'")
    swap = False
    if len(parts) == 5:
        if parts[4] not in ("swap", "identity"):
            raise SchemaError("permutation pairing must be 'swap' or 'identity'")
        swap = parts[4] == "swap"
    try:
        xa, xap, yb, ybp = (int(v) for v in parts[:4])
    except ValueError:
        raise SchemaError("permutation settings must be integers")
    return ChshPermutation(xa, xap, yb, ybp, bob_swap=swap)


def _load_any(path: str, tol: float) -> Behavior | EmpiricalBehavior:
    text = _read(path)
    if behavior_file_kind(text) == "empirical":
        return load_empirical(text)
    return load_behavior(text, tol=tol)


def _as_behavior(source: Behavior | EmpiricalBehavior) -> Behavior:
    return source.to_behavior() if isinstance(source, EmpiricalBehavior) else source


# ----------------------------------------------------------------------
# subcommand handlers
# ----------------------------------------------------------------------

def _cmd_generate(args) -> int:
    picked = [name for name, flag in (("pr-box", args.pr_box),
                                      ("tsirelson", args.tsirelson),
                                      ("dice", args.dice is not None),
                                      ("quantum", args.quantum),
                                      ("lhv", args.lhv is not None)) if flag]
    if len(picked) != 1:
        raise SchemaError("pick exactly one source: --pr-box, --tsirelson, "
                          "--dice KIND, --quantum or --lhv FILE")
    source = picked[0]
    if source == "pr-box":
        behavior = pr_box()
    elif source == "tsirelson":
        behavior = quantum_behavior(tsirelson_setup(singlet=args.singlet))
    elif source == "dice":
        behavior = dice_behavior(args.dice)
    elif source == "quantum":
        if not args.alice_angles or not args.bob_angles:
            raise SchemaError("--quantum needs --alice-angles and --bob-angles")
        state = singlet_state() if args.singlet else maximally_correlated_state()
        behavior = quantum_behavior(QuantumSetup(state, _angles(args.alice_angles),
                                                 _angles(args.bob_angles)))
    else:
        behavior = lhv_behavior(load_lhv_model(_read(args.lhv)))
    _write(args.output, dump_behavior(behavior))
    return EXIT_OK


def _cmd_analyze(args) -> int:
    source = _load_any(args.input, args.tol)
    report = analyze(source, tol=args.tol)
    if args.json:
        _write(args.output, report_to_json(report))
    else:
        _write(args.output, report_to_text(report))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    behavior = _as_behavior(_load_any(args.input, args.tol))
    dataset = simulate_runs(behavior, args.runs, policy=args.policy, seed=args.seed)
    _write(args.output, dataset.to_json())
    return EXIT_OK


def _cmd_estimate(args) -> int:
    dataset = Dataset.from_dict(json.loads(_read(args.input)))
    _write(args.output, dump_behavior(estimate_behavior(dataset)))
    return EXIT_OK


def _cmd_membership(args) -> int:
    behavior = _as_behavior(_load_any(args.input, args.tol))
    result = local_membership(behavior)
    if args.json:
        _write(args.output, result.to_json())
    else:
        lines = [f"membership: {result.status}",
                 f"residual: {result.residual:.6e}",
                 f"boundary: {'yes' if result.boundary else 'no'}"]
        if result.certificate is not None:
            lines.append(f"certificate value {result.certificate.value:.6f} > "
                         f"classical bound {result.certificate.classical_bound:.6f}")
        _write(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_gap(args) -> int:
    behavior = _as_behavior(_load_any(args.input, args.tol))
    perm = _parse_perm(args.perm)
    result = {
        "permutation": perm.label,
        "gap_lower_bound": float(gap_lower_bound(behavior, perm)),
        "min_invariance_gap": float(min_invariance_gap(behavior, perm, tol_ns=args.tol)),
        "min_tv_separation": float(min_tv_separation(behavior, perm, tol_ns=args.tol)),
    }
    if args.json:
        _write(args.output, json.dumps(result, indent=2, sort_keys=True) + "\n")
    else:
        _write(args.output,
               "\n".join([f"permutation: {result['permutation']}",
                          f"gap lower bound (S-2)/2: {result['gap_lower_bound']:.6f}",
                          f"min invariance gap: {result['min_invariance_gap']:.6f}",
                          f"min tv separation: {result['min_tv_separation']:.6f}"]) + "\n")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    rows = sweep(family=args.family, angle=args.angle, start_deg=args.start,
                 stop_deg=args.stop, steps=args.steps)
    _write(args.output, sweep_to_csv(rows))
    return EXIT_OK


# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="PRNG seed (64-bit)")
    common.add_argument("--tol", type=float, default=1e-9,
                        help="tolerance for normalization/no-signaling checks")
    common.add_argument("--json", action="store_true", help="emit JSON instead of text")
    common.add_argument("--output", "-o", default=None,
                        help="output file (default: stdout)")

    parser = argparse.ArgumentParser(
        prog="bellkit",
        description="Analyze bipartite measurement correlations: no-signaling, "
                    "CHSH quantities, local-model membership, invariance gaps.")
    parser.add_argument("--version", action="version", version=f"bellkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common],
                       help="emit a behavior file from a built-in source")
    p.add_argument("--pr-box", action="store_true", help="the S=4 extreme box")
    p.add_argument("--tsirelson", action="store_true",
                   help="quantum-optimal polarization behavior (S = 2*sqrt(2))")
    p.add_argument("--dice", choices=("independent", "common-roll", "paper-demo"),
                   help="six-sided dice tables")
    p.add_argument("--quantum", action="store_true",
                   help="two-qubit behavior at the given polarizer angles")
    p.add_argument("--lhv", metavar="FILE", help="behavior of a hidden-variable model file")
    p.add_argument("--alice-angles", help="comma-separated degrees, e.g. '0,45'")
    p.add_argument("--bob-angles", help="comma-separated degrees, e.g. '22.5,-22.5'")
    p.add_argument("--singlet", action="store_true",
                   help="use the anticorrelated singlet state instead")
    p.set_defaults(handler=_cmd_generate)

    p = sub.add_parser("analyze", parents=[common], help="full report on a behavior file")
    p.add_argument("input", help="behavior or empirical file ('-' for stdin)")
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("simulate", parents=[common],
                       help="simulate seeded experiment runs from a behavior")
    p.add_argument("input", help="behavior file ('-' for stdin)")
    p.add_argument("--runs", type=int, required=True, help="number of runs")
    p.add_argument("--policy", default="uniform-random",
                   help="uniform-random, round-robin or fixed:x,y")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("estimate", parents=[common],
                       help="empirical behavior (counts) from a dataset")
    p.add_argument("input", help="dataset file ('-' for stdin)")
    p.set_defaults(handler=_cmd_estimate)

    p = sub.add_parser("membership", parents=[common],
                       help="local-polytope membership of a behavior")
    p.add_argument("input", help="behavior file ('-' for stdin)")
    p.set_defaults(handler=_cmd_membership)

    p = sub.add_parser("gap", parents=[common],
                       help="minimum invariance gap and separation of a behavior")
    p.add_argument("input", help="behavior file ('-' for stdin)")
    p.add_argument("--perm", default="0,1,0,1",
                   help="setting placement 'xA,xA2,yB,yB2[,swap]' (default 0,1,0,1)")
    p.set_defaults(handler=_cmd_gap)

    p = sub.add_parser("sweep", parents=[common],
                       help="CSV of S along a one-angle family")
    p.add_argument("--family", choices=("quantum", "lhv"), default="quantum")
    p.add_argument("--angle", choices=("alice0", "alice1", "bob0", "bob1"),
                   default="bob0")
    p.add_argument("--start", type=float, default=0.0, help="start angle (degrees)")
    p.add_argument("--stop", type=float, default=45.0, help="stop angle (degrees)")
    p.add_argument("--steps", type=int, default=91)
    p.set_defaults(handler=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except LPFailureError as exc:
        print(f"bellkit: LP failure: {exc} (residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_LP
    except (BellkitError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"bellkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
