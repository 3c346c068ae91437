"""Command-line interface: analyze, sweep, solve thresholds, simulate, estimate.

Every command emits one machine-readable record (JSON by default, CSV with
--format csv) that echoes the configuration that produced it, so results can
be re-parsed and reproduced. Exit codes: 0 success, 1 usage error or no
threshold, 2 when a simulation disagrees with the exact distribution beyond
4 standard deviations on any counter.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

from .analysis import (
    JointDistribution,
    NoThresholdError,
    analytic_curves,
    enumerate_joint,
    estimate_q_from_sift,
    find_threshold,
    key_rate,
)
from .eavesdrop import EnsembleMix, GentleIntercept, InterceptResend
from .montecarlo import TrialConfig, compare_to_oracle, proportion_se, run_trials
from .protocol import Channel, ProtocolKind


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, leaving 2 free for the simulation-mismatch signal
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fraction_arg(text: str) -> Fraction:
    """Parse a probability-like flag exactly ('0.3', '1', '2/7')."""
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text}")
    return value


def _strategy(attack: str, q, mix: EnsembleMix):
    if attack == "none":
        return None
    if attack == "standard":
        return InterceptResend(q=q, mix=mix)
    return GentleIntercept(q=q, mix=mix)


def _rates_record(joint: JointDistribution) -> dict:
    report = key_rate(joint)
    return {
        "p_sift": float(joint.p_sift),
        "qber": float(joint.qber),
        "p_noguess": float(joint.p_eve_abstain),
        "i_ab": report.i_ab,
        "i_ae": report.i_ae,
        "i_be": report.i_be,
        "r": report.r,
    }


def _emit(record: dict, fmt: str, out_path):
    if fmt == "json":
        text = json.dumps(record, indent=2) + "\n"
    else:
        text = _to_csv(record)
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def _to_csv(record: dict) -> str:
    """Flatten a record to CSV: config columns repeat on every row of a table."""
    rows = record.get("rows")
    scalars = {k: v for k, v in record.items() if k != "rows"}
    buf = io.StringIO()
    if rows is None:
        writer = csv.DictWriter(buf, fieldnames=list(scalars))
        writer.writeheader()
        writer.writerow(scalars)
    else:
        fields = list(scalars) + list(rows[0]) if rows else list(scalars)
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({**scalars, **row})
    return buf.getvalue()


def _cmd_analytic(args, parser) -> tuple:
    protocol = ProtocolKind(args.protocol)
    eve = _strategy(args.attack, args.q, EnsembleMix(args.mix))
    joint = enumerate_joint(protocol, eve, Channel(depolarizing=args.depolarize))
    record = {
        "command": "analytic",
        "protocol": protocol.value,
        "attack": args.attack,
        "mix": args.mix,
        "q": float(args.q),
        "depolarize": float(args.depolarize),
        **_rates_record(joint),
    }
    return record, 0


def _cmd_threshold(args, parser) -> tuple:
    protocol = ProtocolKind(args.protocol)
    if args.attack == "none":
        parser.error("threshold requires --attack standard or gentle")
    result = find_threshold(protocol, args.attack, EnsembleMix(args.mix))
    record = {
        "command": "threshold",
        "protocol": protocol.value,
        "attack": args.attack,
        "mix": args.mix,
        "q_star": round(result.q_star, 4),
        "qber_star": round(result.qber_star, 4),
    }
    return record, 0


def _cmd_simulate(args, parser) -> tuple:
    protocol = ProtocolKind(args.protocol)
    if args.n < 1:
        parser.error("--n must be positive")
    if not 0 <= args.seed < 2**64:
        parser.error("--seed must lie in [0, 2^64)")
    eve = _strategy(args.attack, args.q, EnsembleMix(args.mix))
    channel = Channel(depolarizing=args.depolarize)
    config = TrialConfig(
        protocol=protocol, eve=eve, channel=channel, n_rounds=args.n, seed=args.seed
    )
    stats = run_trials(config)
    report = compare_to_oracle(stats, enumerate_joint(protocol, eve, channel))
    record = {
        "command": "simulate",
        "protocol": protocol.value,
        "attack": args.attack,
        "mix": args.mix,
        "q": float(args.q),
        "depolarize": float(args.depolarize),
        "n_rounds": stats.n_rounds,
        "seed": args.seed,
        "n_sifted": stats.n_sifted,
        "n_errors": stats.n_errors,
        "n_eve_agree_alice": stats.n_eve_agree_alice,
        "n_eve_agree_bob": stats.n_eve_agree_bob,
        "n_eve_abstain": stats.n_eve_abstain,
        "sift_rate": stats.sift_rate,
        "sift_rate_se": proportion_se(stats.n_sifted, stats.n_rounds),
        "qber": stats.qber,
        "qber_se": proportion_se(stats.n_errors, stats.n_sifted),
        **{f"z_{e.name}": e.z for e in report.entries},
        "max_abs_z": report.max_abs_z,
        "consistent": report.ok,
    }
    return record, 0 if report.ok else 2


def _cmd_sweep(args, parser) -> tuple:
    protocol = ProtocolKind(args.protocol)
    if args.attack == "none":
        parser.error("sweep requires --attack standard or gentle")
    if args.steps < 2:
        parser.error("--steps must be at least 2")
    mix = EnsembleMix(args.mix)
    rows = []
    for i in range(args.steps):
        q = Fraction(i, args.steps - 1)
        eve = _strategy(args.attack, q if args.attack == "standard" else float(q), mix)
        joint = enumerate_joint(protocol, eve)
        rows.append({"q": float(q), **_rates_record(joint)})
    record = {
        "command": "sweep",
        "protocol": protocol.value,
        "attack": args.attack,
        "mix": args.mix,
        "steps": args.steps,
        "rows": rows,
    }
    return record, 0


def _cmd_estimate_q(args, parser) -> tuple:
    protocol = ProtocolKind(args.protocol)
    if args.total_count <= 0:
        parser.error("--total-count must be positive")
    if not 0 <= args.sift_count <= args.total_count:
        parser.error("--sift-count must lie in [0, total-count]")
    sift_rate = Fraction(args.sift_count, args.total_count)
    try:
        curves = analytic_curves(protocol)
    except ValueError as exc:
        parser.error(str(exc))
    se_rate = proportion_se(args.sift_count, args.total_count)
    slope = float(curves.sift_to_q(1) - curves.sift_to_q(0))
    estimate = estimate_q_from_sift(protocol, sift_rate, margin=2 * se_rate)
    q_hat = float(estimate.q)
    joint = enumerate_joint(protocol, InterceptResend(q=estimate.q, mix=EnsembleMix.SYMMETRIC))
    report = key_rate(joint)
    record = {
        "command": "estimate-q",
        "protocol": protocol.value,
        "sift_count": args.sift_count,
        "total_count": args.total_count,
        "sift_rate": float(sift_rate),
        "q": q_hat,
        "q_raw": float(estimate.q_raw),
        "q_se": slope * se_rate,
        "in_model": estimate.in_model,
        "qber": float(joint.qber),
        "r": report.r,
    }
    return record, 0


def _add_common(sub, attack_default="none"):
    sub.add_argument(
        "--protocol",
        required=True,
        choices=[p.value for p in ProtocolKind],
        help="which protocol to run",
    )
    sub.add_argument(
        "--attack",
        default=attack_default,
        choices=["none", "standard", "gentle"],
        help="eavesdropping strategy family",
    )
    sub.add_argument(
        "--mix",
        default="symmetric",
        choices=[m.value for m in EnsembleMix],
        help="which party's ensemble the eavesdropper impersonates",
    )
    sub.add_argument(
        "--q",
        type=_fraction_arg,
        default=Fraction(0),
        help="attack strength in [0, 1]; decimals and fractions parse exactly",
    )
    sub.add_argument(
        "--depolarize",
        type=_fraction_arg,
        default=Fraction(0),
        help="depolarizing channel strength in [0, 1]",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="scqkd", description=__doc__.splitlines()[0])
    parser.add_argument("--format", default="json", choices=["json", "csv"])
    parser.add_argument("--out", default=None, metavar="FILE", help="write to FILE instead of stdout")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub = commands.add_parser("analytic", help="exact rates for one configuration")
    _add_common(sub)
    sub.set_defaults(func=_cmd_analytic)

    sub = commands.add_parser("threshold", help="attack strength where the key rate vanishes")
    _add_common(sub, attack_default="standard")
    sub.set_defaults(func=_cmd_threshold)

    sub = commands.add_parser("simulate", help="Monte Carlo run checked against enumeration")
    _add_common(sub)
    sub.add_argument("--n", type=int, default=100_000, help="number of rounds")
    sub.add_argument("--seed", type=int, default=0, help="Philox key; fixes the whole trial")
    sub.set_defaults(func=_cmd_simulate)

    sub = commands.add_parser("sweep", help="rate table over a uniform q-grid")
    _add_common(sub, attack_default="standard")
    sub.add_argument("--steps", type=int, default=101, help="number of grid points on [0, 1]")
    sub.set_defaults(func=_cmd_sweep)

    sub = commands.add_parser("estimate-q", help="infer attack strength from sift counts")
    sub.add_argument(
        "--protocol", required=True, choices=[p.value for p in ProtocolKind]
    )
    sub.add_argument("--sift-count", type=int, required=True)
    sub.add_argument("--total-count", type=int, required=True)
    sub.set_defaults(func=_cmd_estimate_q)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        record, code = args.func(args, parser)
    except NoThresholdError as exc:
        sys.stderr.write(f"scqkd: {exc}\n")
        return 1
    for key, value in record.items():
        if isinstance(value, float) and not math.isfinite(value):
            record[key] = repr(value)  # keep the JSON parseable
    _emit(record, args.format, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
