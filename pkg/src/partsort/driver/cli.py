"""Command line entry point: ``partsort --algo hss --p 64 ...``.

Exit codes: 0 ok, 2 configuration error, 3 output check failure.
"""

import argparse
import sys

from .experiment import (
    ALGOS, ExperimentConfig, OracleViolation, open_writer, parse_rounds, run_experiment,
    summarize, sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE = 0, 2, 3


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Reports bad arguments as exit code 2 through :func:`main` instead of exiting."""

    def error(self, message):
        raise _ArgError(message)


def build_parser():
    ap = _Parser(prog="partsort", description=__doc__.splitlines()[0])
    ap.add_argument("--algo", default="hss", choices=ALGOS + ("all",))
    ap.add_argument("--p", type=int, default=16, help="virtual processors")
    ap.add_argument("--n-per-proc", type=int, default=1024)
    ap.add_argument("--epsilon", type=float, default=0.05, help="load imbalance tolerance")
    ap.add_argument("--rounds", type=parse_rounds, default="auto",
                    help="HSS rounds: an integer, 'auto' or 'adaptive'")
    ap.add_argument("--beta", type=int, default=None, help="HykSort samples per interval")
    ap.add_argument("--stages", type=int, default=1)
    ap.add_argument("--dist", default="unif", choices=["unif", "skew1", "skew2", "skew3", "gauss", "zeros"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=1)
    ap.add_argument("--samples-per-proc", type=float, default=1.0,
                    help="per-round samples per processor in adaptive HSS (and HykSort beta)")
    ap.add_argument("--mode", default="fixed", choices=["fixed", "guarantee"])
    ap.add_argument("--check-oracle", action="store_true", help="compare with a full sort")
    ap.add_argument("--epsilon-per-stage", type=float, default=None)
    ap.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    ap.add_argument("--sweep", default=None, help='e.g. "p=16,64;eps=0.02;algo=hss,hyksort"')
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except _ArgError as exc:
        print(f"partsort: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = ExperimentConfig(
        algo=args.algo, p=args.p, n_per_proc=args.n_per_proc, eps=args.epsilon, rounds=args.rounds,
        beta=args.beta, stages=args.stages, dist=args.dist, seed=args.seed, trials=args.trials,
        samples_per_proc=args.samples_per_proc, mode=args.mode, check_oracle=args.check_oracle,
        eps_per_stage=args.epsilon_per_stage)
    try:
        if args.sweep is None:
            cfg.validate()
        stream = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    except (ValueError, OSError) as exc:
        print(f"partsort: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        writer = open_writer(stream)
        if args.sweep is not None:
            rows = sweep(cfg, args.sweep, writer)
        else:
            rows = run_experiment(cfg, writer)
    except OracleViolation as exc:
        print(f"partsort: output check failed: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except ValueError as exc:
        print(f"partsort: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        if stream is not sys.stdout:
            stream.close()
    summarize(rows)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
