"""Command-line interface.

Exit codes: 0 secure / check passed, 2 zero-or-negative key rate or a
failed verification, 1 usage or numerical error.
"""
import argparse
import contextlib
import csv
import json
import math
import sys

import numpy as np

from . import __version__, qmat
from .attack import AttackSpec, build_optimal_attack, holevo_exact, verify_saturation
from .bounds import TSIRELSON, ObservedStatistics, chsh_line, dw_rate
from .errors import DomainError
from .reduction import jordan_blocks, reduce_strategy, verify_pinching
from .simproto import ProtocolConfig, oracle_step3_sweep, run_protocol

EXIT_OK, EXIT_ERROR, EXIT_INSECURE = 0, 1, 2
PINCH_TOL = 1e-9


def _fmt(x):
    return "" if x is None else "%.10g" % x


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_json(args, command, config, result):
    doc = {"tool": "diqkd", "version": __version__, "command": command, "config": config, "result": result}
    with _output(args.out) as fh:
        json.dump(doc, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _floats(text, n=None, name="value"):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name}: expected comma-separated numbers, got {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"{name}: expected {n} numbers, got {len(vals)}")
    return vals


def parse_grid(text):
    """``start:stop:step`` (stop included when hit within 1e-9) or a comma list."""
    if ":" not in text:
        return _floats(text, name="grid")
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty grid {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(n)]


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


# keyrate -----------------------------------------------------------------


def cmd_keyrate(args):
    extra = {}
    S, Q = args.s, args.q
    if args.state:
        rho = qmat.validate_density(qmat.operator_from_json(_load_json(args.state)))
        rho = qmat._require_dim(rho, 4)
        b1 = qmat.PlanarMeasurement(args.b1)
        if S is None:
            S = qmat.max_planar_chsh(rho)
        if Q is None:
            Q = (1 - qmat.correlator(rho, qmat.SZ, qmat.SZ)) / 2
        extra["chi_exact"] = holevo_exact(rho, b1)
        extra["b1_angle"] = b1.angle
    if S is None or Q is None:
        raise DomainError("keyrate needs --s and --q (or --state)")

    report = dw_rate(ObservedStatistics(S=S, Q=Q))
    result = report.to_dict() | extra
    if args.json:
        _emit_json(args, "keyrate", {"s": S, "q": Q, "state": args.state}, result)
    else:
        with _output(args.out) as fh:
            fh.write(f"S = {S:.10g}   Q = {Q:.10g}\n")
            fh.write(f"I(A0:B1)            = {report.iab:.10g}\n")
            fh.write(f"chi device-indep.   = {report.chi_di:.10g}\n")
            fh.write(f"r device-indep.     = {report.r_di:.10g}\n")
            if report.r_std is None:
                fh.write("r standard          = undefined (Q + S/2sqrt2 outside [0, 1])\n")
            else:
                fh.write(f"chi standard        = {report.chi_std:.10g}\n")
                fh.write(f"r standard          = {report.r_std:.10g}\n")
            if "chi_exact" in extra:
                fh.write(f"chi exact (state)   = {extra['chi_exact']:.10g}\n")
    return EXIT_OK if report.r_di > 0 else EXIT_INSECURE


# curve -------------------------------------------------------------------


def _s_rule(args):
    if args.s_rule == "line":
        return chsh_line
    if args.s_rule == "fixed":
        if args.s_value is None:
            raise DomainError("--s-rule fixed needs --s-value")
        return lambda q: args.s_value
    if not args.s_file:
        raise DomainError("--s-rule file needs --s-file")
    pts = []
    with open(args.s_file, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("q", "#"):
                continue
            pts.append((float(row[0]), float(row[1])))
    if len(pts) < 2:
        raise DomainError(f"{args.s_file}: need at least two (q, s) rows")
    pts = np.array(sorted(pts))
    return lambda q: float(np.interp(q, pts[:, 0], pts[:, 1]))


def curve_rows(q_min, q_max, steps, s_of_q, clamp_zero=False):
    if not (0 <= q_min < q_max <= 0.5) or steps < 2:
        raise DomainError("curve needs 0 <= q_min < q_max <= 0.5 and steps >= 2")
    rows = []
    for q in np.linspace(q_min, q_max, steps):
        q = float(q)
        rep = dw_rate(ObservedStatistics(S=float(s_of_q(q)), Q=q))
        r_di, r_std = rep.r_di, rep.r_std
        if clamp_zero:
            r_di = max(r_di, 0.0)
            r_std = None if r_std is None else max(r_std, 0.0)
        rows.append((q, rep.S, r_di, r_std))
    return rows


def cmd_curve(args):
    rows = curve_rows(args.q_min, args.q_max, args.steps, _s_rule(args), args.clamp_zero)
    if args.json:
        config = {k: getattr(args, k) for k in ("q_min", "q_max", "steps", "s_rule", "s_value", "s_file", "clamp_zero")}
        result = [dict(zip(("q", "s", "r_di", "r_std"), r)) for r in rows]
        _emit_json(args, "curve", config, result)
        return EXIT_OK
    with _output(args.out) as fh:
        fh.write("q,s,r_di,r_std\n")
        for r in rows:
            fh.write(",".join(_fmt(x) for x in r) + "\n")
    return EXIT_OK


# attack ------------------------------------------------------------------


def cmd_attack(args):
    grid = args.s_grid if args.s_grid is not None else [args.s]
    report = verify_saturation(grid, Q=args.q, tol=args.tol)
    if args.dump_spec:
        with open(args.dump_spec, "w") as fh:
            specs = [build_optimal_attack(s, args.q).to_json() for s in grid]
            json.dump(specs[0] if len(specs) == 1 else specs, fh, indent=2)
    if args.json:
        _emit_json(args, "attack", {"s_grid": grid, "q": args.q, "tol": args.tol}, report.to_dict())
    else:
        with _output(args.out) as fh:
            fh.write(f"{'S':>12} {'chsh_dev':>10} {'chi_exact':>12} {'F(S)':>12} {'chi_dev':>10} {'rate':>10}\n")
            for r in report.rows:
                fh.write(
                    f"{r['S']:12.8f} {r['chsh_dev']:10.2e} {r['chi_exact']:12.9f} "
                    f"{r['holevo_bound']:12.9f} {r['chi_dev']:10.2e} {r['key_rate']:10.6f}\n"
                )
            fh.write(
                f"max deviations: chsh {report.max_chsh_dev:.2e}, chi {report.max_chi_dev:.2e}, "
                f"marginals {report.max_marginal_dev:.2e}, qber {report.max_qber_dev:.2e} -> "
                f"{'PASS' if report.ok else 'FAIL'}\n"
            )
    return EXIT_OK if report.ok else EXIT_INSECURE


# reduce ------------------------------------------------------------------


def cmd_reduce(args):
    doc = _load_json(args.input)
    a1 = qmat.operator_from_json(doc["a1"])
    a2 = qmat.operator_from_json(doc["a2"])
    dec = jordan_blocks(a1, a2, phase_tol=args.phase_tol)
    dev = verify_pinching(a1, a2, dec)
    result = {
        "alice": dec.to_dict() | {"pinching_deviation": dev},
        "ranks": dec.ranks,
        "phases": dec.phases,
        "pinching_deviation": dev,
    }
    ok = dev <= PINCH_TOL
    if all(k in doc for k in ("b1", "b2", "rho")):
        b1 = qmat.operator_from_json(doc["b1"])
        b2 = qmat.operator_from_json(doc["b2"])
        rho = qmat.operator_from_json(doc["rho"])
        red = reduce_strategy(rho, a1, a2, b1, b2)
        bob_dev = verify_pinching(b1, b2, red.bob)
        ok = ok and bob_dev <= PINCH_TOL
        result["bob"] = red.bob.to_dict() | {"pinching_deviation": bob_dev}
        result["mixture"] = {
            "total_weight": red.total_weight,
            "weighted_chsh": red.weighted_chsh,
            "terms": [
                {"blocks": list(t.blocks), "weight": t.weight, "chsh": t.chsh,
                 "alice_angles": [m.angle for m in t.alice_settings],
                 "bob_angles": [m.angle for m in t.bob_settings]}
                for t in red.terms
            ],
        }
    result["ok"] = ok
    if args.json:
        _emit_json(args, "reduce", {"in": args.input, "phase_tol": args.phase_tol}, result)
    else:
        with _output(args.out) as fh:
            fh.write(f"dimension {dec.dim}: {len(dec.blocks)} blocks, ranks {dec.ranks}\n")
            for b in dec.blocks:
                fh.write(f"  rank {b.rank}  phase {b.phase:.12f}\n")
            fh.write(f"pinching deviation {dev:.3e} -> {'PASS' if ok else 'FAIL'}\n")
            if "mixture" in result:
                m = result["mixture"]
                fh.write(f"{len(m['terms'])} qubit strategies, total weight {m['total_weight']:.12f}, "
                         f"weighted CHSH {m['weighted_chsh']:.12f}\n")
    return EXIT_OK if ok else EXIT_INSECURE


# simulate ----------------------------------------------------------------


def cmd_simulate(args):
    if args.attack:
        attack = AttackSpec.from_json(_load_json(args.attack))
    else:
        attack = build_optimal_attack(args.s, args.q)
    config = ProtocolConfig(
        n_rounds=args.rounds,
        setting_probs_alice=tuple(args.alice_probs),
        setting_probs_bob=tuple(args.bob_probs),
        seed=args.seed,
        symmetrize=not args.no_symmetrize,
    )
    if args.csv:
        report, transcript = run_protocol(attack, config, keep_transcript=True)
        with _output(args.out) as fh:
            transcript.write_csv(fh)
    else:
        report = run_protocol(attack, config)
    if args.json:
        cfg = config.to_dict() | {"s": attack.target_S, "q": attack.target_Q}
        _emit_json(args, "simulate", cfg, report.to_dict())
    elif not args.csv:
        with _output(args.out) as fh:
            fh.write(f"rounds {report.n_rounds} (key {report.n_key}, discarded {report.n_discarded}), backend {report.backend}\n")
            fh.write(f"Q_hat = {report.Q_hat:.6f} +/- {report.Q_se:.6f}\n")
            fh.write(f"S_hat = {report.S_hat:.6f} +/- {report.S_se:.6f}\n")
            fh.write("marginals " + ", ".join(f"{k}={v:+.4f}" for k, v in report.marginal_means.items()) + "\n")
            kr = report.key_rates
            fh.write(f"r_di = {kr.r_di:.6f}   r_std = {_fmt(kr.r_std) or 'undefined'}\n")
    return EXIT_OK if report.key_rates.r_di > 0 else EXIT_INSECURE


# oracle ------------------------------------------------------------------


def cmd_oracle(args):
    report = oracle_step3_sweep(args.samples, seed=args.seed, tol=args.tol)
    if args.json:
        _emit_json(args, "oracle", {"samples": args.samples, "seed": args.seed, "tol": args.tol}, report.to_dict())
    else:
        with _output(args.out) as fh:
            fh.write(report.summary() + "\n")
            for v in report.violations:
                fh.write(f"  counterexample: {json.dumps(v)}\n")
    return EXIT_OK if report.ok else EXIT_INSECURE


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one self-describing JSON document")
    common.add_argument("--seed", type=int, default=0, help="master seed (simulate, oracle)")
    common.add_argument("--out", metavar="FILE", help="write output to FILE instead of stdout")

    parser = argparse.ArgumentParser(prog="diqkd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"diqkd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyrate", parents=[common], help="key rates for observed S and Q")
    p.add_argument("--s", type=float, help="observed CHSH value")
    p.add_argument("--q", type=float, help="observed QBER as a probability")
    p.add_argument("--state", metavar="FILE", help="two-qubit state JSON; fills missing S/Q and reports exact chi")
    p.add_argument("--b1", type=float, default=0.0, help="B1 angle in radians for --state (default sigma_z)")
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("curve", parents=[common], help="key-rate curves as CSV")
    p.add_argument("--q-min", type=float, default=0.0)
    p.add_argument("--q-max", type=float, default=0.15)
    p.add_argument("--steps", type=int, default=151)
    p.add_argument("--s-rule", choices=("line", "fixed", "file"), default="line")
    p.add_argument("--s-value", type=float, help="CHSH value for --s-rule fixed")
    p.add_argument("--s-file", help="CSV of q,s samples for --s-rule file")
    p.add_argument("--clamp-zero", action="store_true", help="render negative rates as 0")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("attack", parents=[common], help="build the optimal attack and verify saturation")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--s-grid", type=parse_grid, help="start:stop:step or comma list of S values")
    g.add_argument("--s", type=float)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--dump-spec", metavar="FILE", help="write the attack specification(s) as JSON")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("reduce", parents=[common], help="Jordan-block reduction of an observable pair")
    p.add_argument("--in", dest="input", required=True, metavar="FILE")
    p.add_argument("--phase-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo protocol simulation")
    p.add_argument("--s", type=float, default=TSIRELSON)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--attack", metavar="FILE", help="attack specification JSON (overrides --s/--q)")
    p.add_argument("--rounds", type=int, default=100_000)
    p.add_argument("--alice-probs", type=lambda t: _floats(t, 3, "--alice-probs"), default=[0.5, 0.25, 0.25])
    p.add_argument("--bob-probs", type=lambda t: _floats(t, 2, "--bob-probs"), default=[0.5, 0.5])
    p.add_argument("--no-symmetrize", action="store_true")
    p.add_argument("--csv", action="store_true", help="dump the round transcript as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", parents=[common], help="brute-force check of the Bell-diagonal bound")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "json", False) and getattr(args, "csv", False):
        parser.error("--json and --csv are mutually exclusive")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"diqkd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
