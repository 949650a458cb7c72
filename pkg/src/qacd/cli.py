"""Command-line entry point: ``qacd <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import harness
from .bn import forward_sample, load_network, true_cpdag
from .ci import ChiSquareProvider, CiQuery, OracleProvider, cached
from .discovery import QacdParams, conditioning_sets
from .harness import ExperimentConfig

# CLI flag -> QacdParams field
_QACD_FLAGS = {
    "alpha": "alpha",
    "delta_cand": "delta_cand",
    "delta0": "delta0",
    "k_max": "k_max",
    "lam": "lam",
    "t_max": "t_max",
    "epsilon": "epsilon",
    "max_sets": "max_sets_per_size",
}


def _seed_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}; expected e.g. 0,1,2")


def _method_list(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    for m in methods:
        if m not in harness.METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}")
    return methods


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML experiment config; command-line flags override it")
    p.add_argument("--network", help="BIF file or bundled network name (asia, earthquake, ...)")
    p.add_argument("--method", type=_method_list, help="qacd, pc or qacd_ablation_t0 (comma list allowed)")
    p.add_argument("--samples", type=int, help="rows to sample per seed")
    p.add_argument("--seeds", type=_seed_list, help="comma-separated seed list")
    p.add_argument("--alpha", type=float, help="CI significance level (QACD and PC)")
    p.add_argument("--delta-cand", type=float)
    p.add_argument("--delta0", type=float)
    p.add_argument("--k-max", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--t-max", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-sets", type=int, help="conditioning sets per size before sampling")
    p.add_argument("--sid", action=argparse.BooleanOptionalAction, default=None, help="compute SID bounds")
    p.add_argument("--sid-cap", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("-v", "--verbose", action="store_true")


def build_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_yaml(args.config) if args.config else ExperimentConfig()
    qacd = {}
    for flag, fld in _QACD_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            qacd[fld] = v
    upd = {}
    if qacd:
        upd["qacd"] = dataclasses.replace(cfg.qacd, **qacd)
    if args.alpha is not None:
        upd["pc_alpha"] = args.alpha
    for flag, fld in (("network", "network_path"), ("method", "methods"), ("samples", "n_samples"),
                      ("seeds", "seeds"), ("sid", "compute_sid"), ("sid_cap", "sid_cap"),
                      ("workers", "workers"), ("out", "output_dir")):
        v = getattr(args, flag, None)
        if v is not None:
            upd[fld] = v
    return dataclasses.replace(cfg, **upd) if upd else cfg


def _print_record(rec):
    keys = ("precision", "recall", "f1", "shd", "nshd", "sid_low", "sid_high", "nsid_low", "nsid_high")
    print(json.dumps({k: getattr(rec, k) for k in keys} | {"sid_computed": rec.sid_computed}))


def cmd_discover(args) -> int:
    cfg = build_config(args)
    seed = cfg.seeds[0]
    net = load_network(cfg.network_path)
    truth = true_cpdag(net)
    data = forward_sample(net, cfg.n_samples, harness.derive_seed(seed, cfg.network_name))
    provider = cached(ChiSquareProvider(data))
    out = Path(args.out) if args.out else None
    for method in cfg.methods:
        est, trace = harness._discover(method, provider, net.n, cfg, harness.derive_seed(seed, cfg.network_name))
        rec = harness._record(net, truth, cfg, method, seed, cfg.n_samples, est, trace, 0.0)
        print(f"# {cfg.network_name} {method} seed={seed} n={cfg.n_samples}")
        print(est.dump(net.names))
        _print_record(rec)
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{method}_cpdag.txt").write_text(est.dump(net.names) + "\n")
            if trace is not None:
                (out / f"{method}_trace.json").write_text(trace.to_json() + "\n")
    return 0


def cmd_benchmark(args) -> int:
    cfg = build_config(args)
    records = harness.run_experiment(cfg)
    paths = harness.write_benchmark(records, cfg.output_dir, cfg)
    if not args.no_plots:
        from .plotting import plot_summary
        plot_summary(harness.summarize(records), Path(cfg.output_dir) / "summary.png", title=cfg.network_name)
    for row in harness.summarize(records, metrics=("f1", "nshd", "nsid_low", "nsid_high")):
        mean = "n/a" if row["mean"] is None else f"{row['mean']:.4f} +- {row['std']:.4f}"
        print(f"{row['method']:>18} {row['metric']:<10} {mean}  (n={row['count']})")
    print(f"wrote {paths['records'].parent}")
    return 0


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    rows = harness.sweep_sample_size(cfg, args.sizes)
    out = Path(cfg.output_dir)
    path = harness.write_csv(out / "f1_vs_n.csv", rows, header_comment=harness.STD_NOTE)
    if not args.no_plots:
        from .plotting import plot_f1_vs_n
        plot_f1_vs_n(rows, out / "f1_vs_n.png", title=cfg.network_name)
    for r in rows:
        print(f"{r['n_samples']:>7} {r['method']:>5} {r['mean_f1']:.4f} +- {r['std_f1']:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_oracle(args) -> int:
    cfg = build_config(args)
    net = load_network(cfg.network_path)
    for method in cfg.methods:
        rec, est, trace = harness.oracle_study(cfg.network_path, method, cfg.qacd, cfg.compute_sid, cfg.sid_cap)
        print(f"# oracle {cfg.network_name} {method}")
        print(est.dump(net.names))
        _print_record(rec)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            if trace is not None:
                (out / f"oracle_{method}_trace.json").write_text(trace.to_json() + "\n")
    return 0


def cmd_ci_dump(args) -> int:
    """Every Phase I query for the first seed as (x, y, z, statistic, dof, p, effective) rows."""
    cfg = build_config(args)
    net = load_network(cfg.network_path)
    if args.oracle:
        provider = OracleProvider(net)
    else:
        data = forward_sample(net, cfg.n_samples, harness.derive_seed(cfg.seeds[0], cfg.network_name))
        provider = ChiSquareProvider(data)
    fh = open(args.out_file, "w", newline="") if args.out_file else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z", "statistic", "dof", "p_value", "effective"])
        params = cfg.qacd
        for x in range(net.n):
            for y in range(x + 1, net.n):
                for z in conditioning_sets(x, y, net.n, params):
                    q = CiQuery.make(x, y, z)
                    r = provider.test(q.x, q.y, q.z)
                    w.writerow([net.names[x], net.names[y], ";".join(net.names[v] for v in z),
                                repr(r.statistic), r.dof, repr(r.p_value), int(r.effective)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qacd", description="QACD causal discovery and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="one run; prints the CPDAG and metrics")
    _common(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("benchmark", help="multi-seed run; writes records/summary CSV + JSON")
    _common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("sweep", help="skeleton F1 of QACD and PC across sample sizes")
    _common(p)
    p.add_argument("--sizes", type=_seed_list, default=[500, 1000, 2000, 5000], help="comma-separated sizes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="run against the d-separation oracle")
    _common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("ci-dump", help="CSV of every Phase I CI query")
    _common(p)
    p.add_argument("--oracle", action="store_true", help="answer with d-separation instead of data")
    p.add_argument("--out-file", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_ci_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"qacd: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
