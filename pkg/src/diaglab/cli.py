"""Command-line entry point: ``diaglab <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import (
    EXP1_FIELDS, EXP2_FIELDS, RANK_FIELDS, rank_types, read_csv, run_exp1,
    run_exp2, write_csv,
)
from .dpi import diagnosis_probability, normalize, read_dpi
from .hstree import enumerate_all, rank_key
from .measure import HEURISTICS
from .sampling import SAMPLE_TYPES, draw_sample
from .session import SessionConfig, run_session
from .synthgen import load_suite

log = logging.getLogger("diaglab")


class UsageError(Exception):
    pass


def _list(text, cast=str):
    try:
        items = [cast(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return items


def _choices(allowed):
    def parse(text):
        items = _list(text)
        bad = [x for x in items if x.lower() not in allowed]
        if bad:
            raise argparse.ArgumentTypeError(f"unknown {', '.join(bad)}; choose from {','.join(allowed)}")
        return [x.lower() for x in items]
    return parse


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _k_list(text):
    return _list(text, _positive)


def _fmt_diag(d):
    return "[" + ", ".join(d) + "]"


def cmd_diagnose(args, out):
    dpi = read_dpi(args.dpi)
    if args.all:
        diagnoses = sorted(enumerate_all(dpi), key=lambda d: rank_key(dpi, d))
        probs = [diagnosis_probability(dpi, d) for d in diagnoses]
        norm = normalize(probs)
    else:
        if args.type is None or args.k is None:
            raise UsageError("diagnose needs --all or both --type and -k")
        sample = draw_sample(dpi, args.type, args.k, args.seed)
        diagnoses, norm = sample.diagnoses, sample.norm_probs
        probs = [diagnosis_probability(dpi, d) for d in diagnoses]
    for d, p, q in zip(diagnoses, probs, norm):
        out.write(f"{_fmt_diag(d)}\tp={p:.6g}\tnorm={q:.4f}\n")


def cmd_session(args, out):
    dpi = read_dpi(args.dpi)
    target = None if args.interactive else _list(args.target)
    config = SessionConfig(
        sample_type=args.type, k=args.k, heuristic=args.heuristic, target=target,
        interactive=args.interactive, sigma=args.sigma, seed=args.seed,
    )
    slog = run_session(dpi, config)
    out.write(slog.render() + "\n")


def _suite(directory):
    if not Path(directory).is_dir():
        raise FileNotFoundError(f"no such directory: {directory}")
    dpis = load_suite(directory)
    if not dpis:
        raise FileNotFoundError(f"no .dpi files in {directory}")
    return dpis


def cmd_exp1(args, out):
    rows = run_exp1(_suite(args.dpis), args.k, args.types, args.mps, args.seed)
    write_csv(rows, EXP1_FIELDS, args.out)
    log.info("wrote %d rows to %s", len(rows), args.out)


def cmd_exp2(args, out):
    rows = run_exp2(
        _suite(args.dpis), args.k, args.types, args.heuristics,
        sessions_per_cell=args.sessions, meas_minutes=args.meas_min, seed=args.seed,
        adjusted=args.adjusted, clock=args.clock,
    )
    write_csv(rows, EXP2_FIELDS, args.out)
    failed = sum(r.n_measurements is None for r in rows)
    if failed:
        log.warning("%d session rows failed", failed)
    log.info("wrote %d rows to %s", len(rows), args.out)


def cmd_rank(args, out):
    ranking = rank_types(read_csv(args.input), args.criterion, args.filter or ())
    write_csv(ranking.rows(), RANK_FIELDS, args.out)
    log.info("%s %s: %s", ranking.scenario, ranking.criterion, ranking.render())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diaglab", description="Sampling-based sequential diagnosis.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("diagnose", help="list minimal diagnoses or draw a sample")
    d.add_argument("--dpi", required=True)
    mode = d.add_mutually_exclusive_group(required=True)
    mode.add_argument("--all", action="store_true", help="every minimal diagnosis, most probable first")
    mode.add_argument("--type", choices=SAMPLE_TYPES)
    d.add_argument("-k", type=_positive)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("session", help="run one sequential diagnosis session")
    s.add_argument("--dpi", required=True)
    s.add_argument("--type", required=True, choices=SAMPLE_TYPES)
    s.add_argument("-k", required=True, type=_positive)
    s.add_argument("--heuristic", required=True, type=str.lower, choices=HEURISTICS)
    who = s.add_mutually_exclusive_group(required=True)
    who.add_argument("--target", help="comma-separated axiom ids of the true diagnosis")
    who.add_argument("--interactive", action="store_true", help="answer measurements on the terminal")
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_session)

    e1 = sub.add_parser("exp1", help="estimate-fidelity campaign")
    e1.add_argument("--dpis", required=True, help="directory of .dpi files")
    e1.add_argument("-k", required=True, type=_k_list)
    e1.add_argument("--types", required=True, type=_choices(SAMPLE_TYPES))
    e1.add_argument("--mps", type=_positive, default=50)
    e1.add_argument("--out", required=True)
    e1.add_argument("--seed", type=int, default=0)
    e1.set_defaults(func=cmd_exp1)

    e2 = sub.add_parser("exp2", help="session-cost campaign")
    e2.add_argument("--dpis", required=True, help="directory of .dpi files")
    e2.add_argument("-k", required=True, type=_k_list)
    e2.add_argument("--types", required=True, type=_choices(SAMPLE_TYPES))
    e2.add_argument("--heuristics", required=True, type=_choices(HEURISTICS))
    e2.add_argument("--sessions", type=_positive, default=10)
    e2.add_argument("--meas-min", type=lambda t: _list(t, float), default=[1.0, 10.0])
    e2.add_argument("--adjusted", action="store_true", help="also emit rd/wf rows priced at bf sampling time")
    e2.add_argument("--clock", choices=("wall", "checks"), default="wall",
                    help="time columns in milliseconds or in reasoner checks")
    e2.add_argument("--out", required=True)
    e2.add_argument("--seed", type=int, default=0)
    e2.set_defaults(func=cmd_exp2)

    r = sub.add_parser("rank", help="rank sample types from an experiment table")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--criterion", required=True, type=str.upper, choices=("E", "P", "M", "T"))
    r.add_argument("--filter", action="append", help="key=value, e.g. k=6 or h=mps; repeatable")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_rank)
    return p


def main(argv=None, stdout=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    out = stdout or sys.stdout
    try:
        args.func(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"diaglab: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"diaglab: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
