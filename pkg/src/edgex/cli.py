"""Command-line entry point: sample, expect, verify, limit, report."""
import argparse
import csv
import json
import os
import sys

from . import analytics as an
from . import graphlimit as gl
from . import sampler as sp
from .acceptance import SUITES, verify_suite
from .errors import EdgexError, SchemaError
from .experiment import ExperimentConfig, build_intensity, emit_report, run_experiment, sample_one


def _load_config(args):
    if not args.config:
        raise SchemaError("--config", "a config file is required for this command")
    with open(args.config, encoding="utf-8") as fh:
        cfg = ExperimentConfig.from_json(fh.read())
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg.validate()


def _out_dir(args, cfg=None):
    out = args.out or (cfg.output if cfg else "out")
    os.makedirs(out, exist_ok=True)
    return out


def cmd_sample(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    mu, g = sample_one(cfg, args.at)
    with open(os.path.join(out, "graph.tsv"), "w", encoding="utf-8") as fh:
        fh.write(g.to_text())
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(g.summary(), sort_keys=True) + "\n")
    if hasattr(mu, "to_text") and len(mu) <= 10**6:
        with open(os.path.join(out, "intensity.tsv"), "w", encoding="utf-8") as fh:
            fh.write(mu.to_text())
    print(json.dumps(g.summary(), sort_keys=True))
    return 0


def cmd_expect(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    mu = build_intensity(cfg.intensity, cfg.seed)
    path = os.path.join(out, "expectations.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "v_exp", "e_exp", "e_var", "v_var_bound"])
        for x in cfg.schedule:
            t = x / mu.total_mass() if cfg.mode == "fixed_m" else float(x)
            w.writerow([repr(t), repr(an.expected_vertices(mu, t)), repr(an.expected_edges(mu, t)),
                        repr(an.edge_count_variance(mu, t)), repr(an.vertex_count_variance_bound(mu, t))])
    print(path)
    return 0


def cmd_verify(args):
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}", file=sys.stderr)
        return 2

    def show(v):
        mark = "PASS" if v.passed else "FAIL"
        print(f"[{mark}] criterion {v.params['criterion']:>2} {v.check}: statistic={v.statistic!r} "
              f"threshold={v.threshold!r} ({v.details['seconds']}s)", flush=True)

    verdicts = verify_suite(args.suite, args.seed or 0, report=show)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "verdicts.json"), "w", encoding="utf-8") as fh:
            payload = [{k: v for k, v in vd.to_dict().items() if k != "details"} for vd in verdicts]
            fh.write(json.dumps(payload, indent=2, sort_keys=True, default=an._json_default) + "\n")
    return 0 if all(v.passed for v in verdicts) else 1


def cmd_limit(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    mu, g = sample_one(cfg, args.at)
    g = sp.simplify(g)
    ref = args.graphon
    w2 = gl.AnalyticGraphon.half() if ref == "half_graphon" else gl.AnalyticGraphon("constant", c=1.0)
    w1 = gl.empirical_graphon(g)
    res = gl.dcut_upper(w1, w2)
    with open(os.path.join(out, "graphon.txt"), "w", encoding="utf-8") as fh:
        fh.write(w1.to_text())
    report = gl.distance_report(["G", ref], res)
    with open(os.path.join(out, "distance.json"), "w", encoding="utf-8") as fh:
        fh.write(report + "\n")
    print(report)
    return 0


def cmd_report(args):
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    rep = run_experiment(cfg, threads=args.threads)
    paths = emit_report(rep, args.format, out)
    if not args.no_figures:
        from .plotting import render_report
        paths += render_report(rep, out)
    for p in paths:
        print(p)
    for v in rep.verdicts:
        print(f"[{'PASS' if v['pass'] else 'FAIL' if v['pass'] is False else 'INFO'}] {v['check']}")
    return 0 if rep.passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="edgex", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp_):
        sp_.add_argument("--config", help="experiment config (JSON)")
        sp_.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp_.add_argument("--out", help="output directory")
        sp_.add_argument("--threads", type=int, default=1, help="replicate-level worker threads")
        return sp_

    s = common(sub.add_parser("sample", help="sample one graph at a schedule point"))
    s.add_argument("--at", type=float, default=None, help="t (or m); defaults to the last schedule entry")
    s.set_defaults(func=cmd_sample)

    s = common(sub.add_parser("expect", help="closed-form expectations along the schedule"))
    s.set_defaults(func=cmd_expect)

    s = common(sub.add_parser("verify", help="run an acceptance suite"))
    s.add_argument("--suite", default="quick", help="quick or full")
    s.set_defaults(func=cmd_verify)

    s = common(sub.add_parser("limit", help="cut-distance bound of a sample to a reference graphon"))
    s.add_argument("--at", type=float, default=None)
    s.add_argument("--graphon", default="half_graphon", choices=["half_graphon", "constant"])
    s.set_defaults(func=cmd_limit)

    s = common(sub.add_parser("report", help="run the experiment, write CSV/JSON and figures"))
    s.add_argument("--format", default="csv-bundle", choices=["json", "csv-bundle"])
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (EdgexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
