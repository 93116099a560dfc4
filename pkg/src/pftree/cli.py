"""Command-line front end.

Subcommands: tree-stats | bench | theory | generate-data | filter.  All
output is tidy CSV (header row, UTF-8, '.' decimal separator) written to
--out or stdout; plotting is left to whatever tool consumes the CSV.  All
randomness flows from --seed.  A JSON file passed with --config supplies
defaults for any flag (command line still wins).

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

import argparse
import json
import sys

from . import experiments as ex
from .models import generate_synthetic, load_dataset, save_dataset
from .smc import KEY_DATA, run_filter, substream


class UsageError(Exception):
    pass


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(v) for v in str(text).split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text):
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v for v in str(text).split(",") if v != ""]


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="base seed; replicate r uses seed+r")
    parser.add_argument("--out", default="-", help="output CSV path ('-' = stdout)")
    parser.add_argument("--workers", type=int, default=1, help="process pool size for replicates")
    parser.add_argument("--config", default=None, help="JSON file with default values for any flag")


def build_parser():
    parser = argparse.ArgumentParser(prog="pftree", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = [parser]

    p = sub.add_parser("tree-stats", help="tree-size statistics over a (scheme, N, T) sweep")
    _add_common(p)
    p.add_argument("--model", default="pz", choices=ex.MODELS)
    p.add_argument("--N", type=_int_list, default=[256], help="comma-separated particle counts")
    p.add_argument("--T", type=_int_list, default=[1000], help="comma-separated horizons")
    p.add_argument("--schemes", type=_str_list, default=["multinomial"])
    p.add_argument("--replicates", type=int, default=25)
    p.add_argument("--substeps", type=int, default=100, help="RK4 substeps per unit time")
    p.add_argument("--capacity-multiple", type=int, default=3, help="initial slots per particle")
    p.add_argument("--per-step", action="store_true", help="emit one row per time step")
    p.set_defaults(func=cmd_tree_stats)
    parsers.append(p)

    p = sub.add_parser("bench", help="wall time of prune+insert per step")
    _add_common(p)
    p.add_argument("--model", default="pz", choices=ex.MODELS)
    p.add_argument("--N", type=_int_list, default=[256, 512, 1024])
    p.add_argument("--T", type=_int_list, default=[1000])
    p.add_argument("--schemes", type=_str_list, default=["multinomial"])
    p.add_argument("--replicates", type=int, default=3)
    p.add_argument("--substeps", type=int, default=100)
    p.add_argument("--capacity-multiple", type=int, default=3)
    p.set_defaults(func=cmd_bench)
    parsers.append(p)

    p = sub.add_parser("theory", help="analytic tables and bound verification")
    theory_sub = p.add_subparsers(dest="theory_command", required=True)

    q = theory_sub.add_parser("laws", help="transition law of a lineage chain")
    _add_common(q)
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--eps", type=float, default=1.0)
    q.add_argument("--q", type=int, required=True, help="current lineage count")
    q.add_argument("--chain", choices=("mixed", "uniform"), default="mixed")
    q.set_defaults(func=cmd_theory_laws)
    parsers.append(q)

    q = theory_sub.add_parser("bounds", help="Monte-Carlo check of the tree-size bounds")
    _add_common(q)
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--eps", type=float, default=1.0)
    q.add_argument("--T", type=int, default=1000)
    q.add_argument("--runs", type=int, default=100)
    q.add_argument("--scheme", default="multinomial")
    q.add_argument("--model", default="pz", choices=ex.MODELS)
    q.add_argument("--neutral", action="store_true", help="use the uniform-weights model")
    q.add_argument("--substeps", type=int, default=100)
    q.set_defaults(func=cmd_theory_bounds)
    parsers.append(q)

    q = theory_sub.add_parser("lemma1", help="decay-sequence sums against N log N")
    _add_common(q)
    q.add_argument("--N", type=_int_list, default=[10, 100, 1000])
    q.add_argument("--eps", type=float, default=0.5)
    q.add_argument("--tol", type=float, default=1e-9)
    q.set_defaults(func=cmd_theory_lemma1)
    parsers.append(q)

    q = theory_sub.add_parser("coupling", help="pathwise domination of the coupled chains")
    _add_common(q)
    q.add_argument("--N", type=int, default=20)
    q.add_argument("--eps", type=float, default=0.5)
    q.add_argument("--runs", type=int, default=1000)
    q.set_defaults(func=cmd_theory_coupling)
    parsers.append(q)

    p = sub.add_parser("generate-data", help="simulate a synthetic dataset")
    _add_common(p)
    p.add_argument("--model", default="pz", choices=ex.MODELS)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--substeps", type=int, default=100)
    p.set_defaults(func=cmd_generate_data)
    parsers.append(p)

    p = sub.add_parser("filter", help="run one filter, emit per-step tree statistics")
    _add_common(p)
    p.add_argument("--model", default="pz", choices=ex.MODELS)
    p.add_argument("--data", default=None, help="dataset CSV (default: synthesize from seed)")
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--T", type=int, default=1000, help="horizon when synthesizing")
    p.add_argument("--scheme", default="multinomial")
    p.add_argument("--substeps", type=int, default=100)
    p.add_argument("--capacity-multiple", type=int, default=3)
    p.add_argument("--dump-tree", default=None, help="write a JSON snapshot of the final tree here")
    p.set_defaults(func=cmd_filter)
    parsers.append(p)

    return parser, parsers


def _sweep_config(args, per_step=False):
    return ex.ExperimentConfig(
        model=args.model,
        n_values=args.N,
        t_values=args.T,
        schemes=args.schemes,
        replicates=args.replicates,
        base_seed=args.seed,
        workers=args.workers,
        substeps=args.substeps,
        capacity_multiple=args.capacity_multiple,
        per_step=per_step,
    )


def cmd_tree_stats(args):
    config = _sweep_config(args, per_step=args.per_step)
    header = ex.TREE_STATS_PER_STEP_HEADER if args.per_step else ex.TREE_STATS_HEADER
    ex.write_csv(args.out, header, ex.tree_stats_rows(config))


def cmd_bench(args):
    config = _sweep_config(args)
    ex.write_csv(args.out, ex.BENCH_HEADER, ex.bench_rows(config))


def cmd_theory_laws(args):
    rows = ex.theory_laws_rows(args.N, args.eps, args.q, chain=args.chain)
    ex.write_csv(args.out, ex.LAWS_HEADER, rows)


def cmd_theory_bounds(args):
    model_name = "neutral" if args.neutral else args.model
    rows = ex.theory_bounds_rows(
        args.N, args.eps, args.T, args.runs, scheme=args.scheme,
        model_name=model_name, base_seed=args.seed, substeps=args.substeps,
    )
    ex.write_csv(args.out, ex.REPORT_HEADER, rows)


def cmd_theory_lemma1(args):
    ex.write_csv(args.out, ex.LEMMA1_HEADER, ex.theory_lemma1_rows(args.N, args.eps, tol=args.tol))


def cmd_theory_coupling(args):
    rows = ex.theory_coupling_rows(args.N, args.eps, args.runs, base_seed=args.seed)
    ex.write_csv(args.out, ex.COUPLING_HEADER, rows)


def cmd_generate_data(args):
    model = ex.make_model(args.model, args.substeps)
    hidden, obs = generate_synthetic(model, args.T, substream(args.seed, KEY_DATA, 0))
    if args.out == "-":
        raise UsageError("generate-data needs --out (a dataset file path)")
    save_dataset(args.out, obs, hidden=hidden)


def cmd_filter(args):
    model = ex.make_model(args.model, args.substeps)
    if args.data is not None:
        obs = load_dataset(args.data)["y"]
    else:
        _, obs = generate_synthetic(model, args.T, substream(args.seed, KEY_DATA, 0))
    result = run_filter(model, obs, args.N, scheme=args.scheme, seed=args.seed,
                        capacity=args.capacity_multiple * args.N)
    rows = [
        [t, s.node_count, s.coalescence_time, s.distance_to_mrca, s.crown_size, s.adjusted_nodes]
        for t, s in enumerate(result.stats)
    ]
    ex.write_csv(args.out, ["t", "n_T", "c_T", "d_T", "m_T", "adjusted"], rows)
    if args.dump_tree:
        with open(args.dump_tree, "w", encoding="utf-8") as fh:
            json.dump(result.tree.snapshot(), fh)


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    defaults = {}
    if known.config:
        try:
            with open(known.config, encoding="utf-8") as fh:
                defaults = {k.replace("-", "_"): v for k, v in json.load(fh).items()}
        except (OSError, json.JSONDecodeError) as err:
            print(f"pftree: cannot read config {known.config}: {err}", file=sys.stderr)
            return 2
    parser, parsers = build_parser()
    for p in parsers:
        p.set_defaults(**defaults)
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ValueError) as err:
        print(f"pftree: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # runtime failure, not a usage problem
        print(f"pftree: error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
