"""Command-line front end: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 bad input, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit_json(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _targets(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad target list {text!r}") from None


# --------------------------------------------------------------------------
# Input helpers
# --------------------------------------------------------------------------

def _load_records(path, truth=None, labeled=False):
    """Records plus labels (None when unlabeled)."""
    from .synth import read_truth
    from .trace import read_labeled_log, read_log
    if labeled:
        return read_labeled_log(path)
    records = read_log(path)
    if truth is None:
        return records, None
    labels = read_truth(truth)
    if len(labels) != len(records):
        raise ValueError(f"truth file has {len(labels)} labels for {len(records)} records")
    return records, labels


def _load_actions(args):
    from .features import USER_ACTION
    records, labels = _load_records(args.input, args.truth, labeled=args.truth is None)
    return [r for r, lab in zip(records, labels) if lab == USER_ACTION]


def _tree_params(args) -> dict:
    params = {"min_leaf": args.min_leaf, "min_gain": args.min_gain}
    if args.kind == "forest":
        params.update(n_trees=args.trees, feature_subset_size=args.subset, seed=args.seed, jobs=args.jobs)
    return params


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_gen(args) -> int:
    from . import synth
    from .graph import write_graphs
    from .trace import write_log
    config = synth.load_config(args.config, seed=args.seed, n_browsers=args.browsers)
    trace = synth.generate(config)
    write_log(args.out, trace.records)
    if args.truth:
        synth.write_truth(args.truth, trace.labels)
    if args.graphs:
        write_graphs(args.graphs, trace.truth_graphs.values())
    if args.history:
        synth.write_histories(args.history, trace.histories)
    _emit_json({"records": len(trace.records), "user_actions": trace.labels.count("user_action"),
                "action_fraction": trace.action_fraction, "browsers": len(trace.histories),
                "truth_graphs": len(trace.truth_graphs), "seed": config.seed})
    return EXIT_OK


def cmd_features(args) -> int:
    from .features import AdBlacklist, features_for_records, write_feature_csv
    from .trace import filter_abnormal_browsers
    records, labels = _load_records(args.input, args.truth, args.labeled)
    if args.drop_abnormal is not None:
        _, removed = filter_abnormal_browsers(records, args.drop_abnormal)
        idx = [i for i, r in enumerate(records) if r.browser not in removed]
        records = [records[i] for i in idx]
        labels = None if labels is None else [labels[i] for i in idx]
    ads = AdBlacklist.load(args.ads) if args.ads else None
    vectors = features_for_records(records, ads, args.window, labels)
    write_feature_csv(args.out, vectors)
    return EXIT_OK


def cmd_train(args) -> int:
    from .classifier import Dataset, save_model, train_model
    from .features import read_feature_csv
    data = Dataset.from_vectors(read_feature_csv(args.features), labeled=True)
    model = train_model(data, args.kind, **_tree_params(args))
    save_model(args.model, model)
    return EXIT_OK


def cmd_classify(args) -> int:
    from .classifier import Dataset, load_model, predict_labels
    from .features import AUTOMATIC, USER_ACTION, features_for_records, write_feature_csv
    from .trace import read_log, write_log
    model = load_model(args.model)
    records = read_log(args.input)
    vectors = features_for_records(records, window=args.window)
    pred = predict_labels(model, Dataset.from_vectors(vectors, labeled=False))
    labels = [USER_ACTION if p else AUTOMATIC for p in pred]
    write_log(args.out, records, labels)
    if args.features_out:
        write_feature_csv(args.features_out, [v.with_label(lab) for v, lab in zip(vectors, labels)])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .classifier import Dataset, cross_validate
    from .features import read_feature_csv
    data = Dataset.from_vectors(read_feature_csv(args.features), labeled=True)
    params = _tree_params(args)
    params.pop("jobs", None)
    report = cross_validate(data, k=args.folds, seed=args.seed, kind=args.kind, jobs=args.jobs, **params)
    _emit_json({"kind": args.kind, "folds": args.folds, "seed": args.seed, **report.as_dict()}, args.out)
    print(report.table(), file=sys.stderr)
    return EXIT_OK


def cmd_match(args) -> int:
    from .features import AUTOMATIC
    from .groundtruth import match_history, read_history
    from .sessions import browser_hash
    from .synth import history_filename
    from .features import browser_partitions
    from .trace import read_log, write_log
    records = read_log(args.input)
    groups = browser_partitions(records)
    hist_path = Path(args.history)
    labels = [AUTOMATIC] * len(records)
    summary = {"browsers": len(groups), "matched": 0, "unmatched_history": 0, "via_redirect": 0,
               "per_browser": {}}
    for browser, idx in groups.items():
        if hist_path.is_dir():
            f = hist_path / history_filename(browser)
            history = read_history(f) if f.exists() else []
        elif len(groups) == 1:
            history = read_history(hist_path)
        else:
            raise ValueError("a single history file needs a single-browser log; pass a directory instead")
        browser_labels, report = match_history(history, [records[i] for i in idx], args.tolerance)
        for i, lab in zip(idx, browser_labels):
            labels[i] = lab
        summary["matched"] += report.matched
        summary["unmatched_history"] += len(report.unmatched_history)
        summary["via_redirect"] += report.via_redirect
        summary["per_browser"][browser_hash(browser)] = report.matched
    write_log(args.out, records, labels)
    _emit_json(summary, args.report)
    return EXIT_OK


def cmd_sessions(args) -> int:
    from .sessions import idle_times, sessions_by_browser, think_times, write_sessions_csv
    from .stats import write_ecdf_csv
    actions = _load_actions(args)
    by_browser = sessions_by_browser(actions, args.gap)
    flat = [s for ss in by_browser.values() for s in ss]
    write_sessions_csv(args.out, flat)
    if args.think_ecdf:
        groups: dict = {}
        for a in actions:
            groups.setdefault(a.browser, []).append(a)
        tt = [t for acts in groups.values() for t in think_times(sorted(acts, key=lambda r: r.timestamp))]
        if tt:
            write_ecdf_csv(args.think_ecdf, tt, ("think_time_s", "ecdf"))
    if args.idle_ecdf:
        idle = [t for ss in by_browser.values() for t in idle_times(ss)]
        if idle:
            write_ecdf_csv(args.idle_ecdf, idle, ("idle_time_s", "ecdf"))
    _emit_json({"browsers": len(by_browser), "sessions": len(flat), "actions": len(actions)})
    return EXIT_OK


def cmd_graphs(args) -> int:
    from .graph import build_graphs, write_graphs
    graphs = build_graphs(_load_actions(args))
    write_graphs(args.out, graphs.values())
    _emit_json({"graphs": len(graphs)})
    return EXIT_OK


def cmd_metrics(args) -> int:
    from .graph import daily_consumption, graph_metrics, read_graphs
    from .sessions import browser_hash
    from .stats import summary, tukey_outliers
    graphs = read_graphs(args.graphs)
    rows = []
    for g in graphs:
        if not g.visit_count:
            continue
        m = graph_metrics(g)
        rows.append({"browser_hash": browser_hash(g.browser), "household_id": g.browser.household_id,
                     "day": g.day.isoformat(), **m})
    fields = ["browser_hash", "household_id", "day", "vertices", "edges", "pages", "actions", "domains",
              "longest_path", "path_domains", "n_wcc", "biggest_wcc_ratio"]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    if args.consumption:
        cons = daily_consumption(graphs)
        with open(args.consumption, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["browser_hash", "day", "device", "pages", "domains", "actions", "revisit_ratio"])
            for c in cons:
                writer.writerow([browser_hash(c["browser"]), c["day"].isoformat(), c["device"], c["pages"],
                                 c["domains"], c["actions"], repr(c["revisit_ratio"])])
    out = {"graphs": len(rows)}
    for key in ("pages", "domains", "longest_path", "path_domains", "n_wcc", "biggest_wcc_ratio"):
        out[key] = summary([r[key] for r in rows])
    paths = [r["longest_path"] for r in rows]
    if len(paths) >= 4:
        t = tukey_outliers(paths)
        out["longest_path_tukey"] = {"q1": t.q1, "q3": t.q3, "upper_fence": t.upper_fence,
                                     "outliers": len(t.outliers), "outlier_share": len(t.outliers) / len(paths)}
    _emit_json(out, args.summary)
    return EXIT_OK


def cmd_promoters(args) -> int:
    from .graph import read_graphs
    from .promoters import load_promoter_config, promoter_fraction_table, promoter_ranking, write_ranking_csv
    from .sessions import browser_hash
    graphs = read_graphs(args.graphs)
    config = load_promoter_config(args.config, args.min_pages)
    ranking = promoter_ranking(graphs)
    write_ranking_csv(args.ranking, ranking)
    rows, excluded = promoter_fraction_table(graphs, config)
    if args.fractions:
        with open(args.fractions, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["browser_hash", "day", "direct_se", "reachable_se", "direct_osn", "reachable_osn"])
            for r in rows:
                writer.writerow([browser_hash(r["browser"]), r["day"].isoformat()]
                                + [repr(r[k]) for k in ("direct_se", "reachable_se", "direct_osn", "reachable_osn")])
    _emit_json({"domains_ranked": len(ranking), "top": ranking[:10], "graphs_scored": len(rows),
                "graphs_excluded": len(excluded)})
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .graph import build_graphs, read_graphs
    from .https_sim import simulate_checkpoints
    from .promoters import load_promoter_config
    config = load_promoter_config(args.config)
    retain = frozenset() if args.no_retain else None
    if args.actions:
        from .trace import read_labeled_log
        from .features import USER_ACTION
        records, labels = read_labeled_log(args.actions)
        actions = [r for r, lab in zip(records, labels) if lab == USER_ACTION]
        graphs = list(build_graphs(actions).values())
    else:
        actions = None
        graphs = read_graphs(args.graphs)
    report = simulate_checkpoints(graphs, args.target, retain, actions, config)
    _emit_json(report, args.out)
    if args.out:
        for cp in report["checkpoints"]:
            print(f"target {cp['target']:.2f}: achieved {cp['achieved']:.4f} "
                  f"with {len(cp['migrated'])} domains", file=sys.stderr)
    return EXIT_OK


def _read_sample(path, column=None) -> list[float]:
    values = []
    with open(path, encoding="utf-8") as fh:
        if column is not None:
            for row in csv.DictReader(fh):
                values.append(float(row[column]))
            return values
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                values.append(float(line))
    return values


def cmd_ks(args) -> int:
    from .stats import ks_two_sample
    a = _read_sample(args.a, args.column)
    b = _read_sample(args.b, args.column)
    r = ks_two_sample(a, b, args.alpha)
    _emit_json({"statistic": r.statistic, "p_value": r.p_value, "reject": r.reject, "alpha": args.alpha,
                "n": len(a), "m": len(b)}, args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _add_model_params(p) -> None:
    p.add_argument("--kind", choices=("tree", "forest"), default="tree")
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--min-gain", type=float, default=1e-4)
    p.add_argument("--trees", type=int, default=101, help="forest size")
    p.add_argument("--subset", type=int, default=None, help="features drawn per split (forest)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for stochastic steps")
    common.add_argument("--jobs", type=int, default=1, help="maximum parallel workers")

    parser = _Parser(prog="clickstream", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic labeled trace")
    p.add_argument("--config", help="TOML generator config")
    p.add_argument("--out", required=True, help="trace log (TSV)")
    p.add_argument("--truth", help="line-number -> label file")
    p.add_argument("--graphs", help="directory for truth-graph edge lists")
    p.add_argument("--history", help="directory for per-browser history files")
    p.add_argument("--browsers", type=int, default=None, help="override n_browsers")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("features", parents=[common], help="extract the 17 features per request")
    p.add_argument("--in", dest="input", required=True, help="trace log")
    p.add_argument("--out", required=True, help="feature CSV")
    p.add_argument("--truth", help="truth file to attach labels")
    p.add_argument("--labeled", action="store_true", help="input carries a trailing label column")
    p.add_argument("--window", type=float, default=30.0, help="child window in seconds")
    p.add_argument("--ads", help="ad-term blacklist file")
    p.add_argument("--drop-abnormal", type=float, default=None, metavar="RATIO",
                   help="drop browsers whose missing-referer ratio is at least RATIO")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common], help="train a model on labeled features")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True, help="output model JSON")
    _add_model_params(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", parents=[common], help="label a trace with a trained model")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="labeled log")
    p.add_argument("--window", type=float, default=30.0)
    p.add_argument("--features-out", help="also write the feature CSV with predicted labels")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", parents=[common], help="stratified k-fold cross-validation")
    p.add_argument("--features", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out", help="JSON report (stdout when omitted)")
    _add_model_params(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("match", parents=[common], help="label a trace from browser histories")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--history", required=True, help="history TSV (single browser) or directory")
    p.add_argument("--out", required=True, help="labeled log")
    p.add_argument("--tolerance", type=float, default=10.0, help="seconds")
    p.add_argument("--report", help="JSON match report (stdout when omitted)")
    p.set_defaults(func=cmd_match)

    for name, func, helptext in (("sessions", cmd_sessions, "segment user-actions into sessions"),
                                 ("graphs", cmd_graphs, "build per-(browser, day) clickstream graphs")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--in", dest="input", required=True, help="labeled log, or raw log with --truth")
        p.add_argument("--truth", help="truth file for a raw log")
        if name == "sessions":
            p.add_argument("--out", required=True, help="sessions CSV")
            p.add_argument("--gap", type=float, default=1800.0, help="session gap in seconds")
            p.add_argument("--think-ecdf", help="think-time ECDF CSV")
            p.add_argument("--idle-ecdf", help="idle-time ECDF CSV")
        else:
            p.add_argument("--out", required=True, help="edge-list directory")
        p.set_defaults(func=func)

    p = sub.add_parser("metrics", parents=[common], help="per-graph path and component metrics")
    p.add_argument("--graphs", required=True, help="edge-list file or directory")
    p.add_argument("--out", required=True, help="per-graph CSV")
    p.add_argument("--consumption", help="daily consumption CSV")
    p.add_argument("--summary", help="summary JSON (stdout when omitted)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("promoters", parents=[common], help="promoter ranking and reachability")
    p.add_argument("--graphs", required=True)
    p.add_argument("--ranking", required=True, help="ranking CSV")
    p.add_argument("--fractions", help="per-graph direct/reachable CSV")
    p.add_argument("--config", help="promoter list file")
    p.add_argument("--min-pages", type=int, default=20)
    p.set_defaults(func=cmd_promoters)

    p = sub.add_parser("simulate", parents=[common], help="HTTPS migration what-if")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graphs", help="edge-list directory (graph metrics only)")
    src.add_argument("--actions", help="labeled log (graphs and sessions recomputed)")
    p.add_argument("--target", type=_targets, default=[0.15, 0.30, 0.45],
                   help="comma-separated removed-action fractions")
    p.add_argument("--config", help="promoter list file (referer-retaining domains)")
    p.add_argument("--no-retain", action="store_true", help="migrated domains emit no referers")
    p.add_argument("--out", help="JSON report (stdout when omitted)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ks", parents=[common], help="two-sample Kolmogorov-Smirnov test")
    p.add_argument("--a", required=True, help="sample file, one value per line")
    p.add_argument("--b", required=True)
    p.add_argument("--column", help="read this CSV column instead")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and args.command in ("train", "evaluate"):
        args.seed = 0
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"clickstream {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"clickstream {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
