"""Command-line front end: simulate, analyze, build-dataset, train, evaluate, report.

Exit status is 0 on success, 1 on runtime or data errors and 2 on usage
errors.  Diagnostics go to stderr; data only to the paths given with --out /
--model.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .alignment import FeatureSetKind, build_dataset, load_dataset_csv, store_dataset_csv
from .correlation import cross_correlation, kpi_series, peak_lag, write_curve_csv
from .errors import PqosError
from .evaluation import ExperimentConfig, load_experiment_config, load_report, mrpe, run_experiment
from .gbt import GbtConfig, GbtModel, fit
from .radio_sim import CampaignConfig, EnvironmentConfig, load_config, simulate_campaign
from .trace_store import load_traces, resample, store_csv

log = logging.getLogger("pqos")

_KPIS = ("rsrp_dbm", "rsrq_db", "rssi_dbm", "snr_db", "throughput_mbps", "cell_load", "connected_devices")


def _pick(traces, vid):
    for t in traces:
        if t.vehicle_id == str(vid):
            return t
    raise PqosError(f"vehicle {vid} not found (available: {', '.join(t.vehicle_id for t in traces)})")


def _need_file(path):
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path


def cmd_simulate(args) -> int:
    if args.config:
        env, camp = load_config(_need_file(args.config))
    else:
        env, camp = EnvironmentConfig(), CampaignConfig()
    if args.seed is not None:
        camp = replace(camp, seed=args.seed)
    traces = simulate_campaign(env, camp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for tr in traces:
        store_csv([tr], out / f"vehicle_{tr.vehicle_id}.csv")
    log.info("wrote %d traces to %s", len(traces), out)
    return 0


def cmd_analyze(args) -> int:
    traces = load_traces(args.traces)
    a = resample(_pick(traces, args.next), args.period_s)
    b = resample(_pick(traces, args.self_id), args.period_s)
    curve = cross_correlation(kpi_series(a, args.kpi), kpi_series(b, args.kpi), args.max_lag_s, args.period_s)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"xcorr_{args.kpi}_next{args.next}_self{args.self_id}"
    write_curve_csv(curve, out / f"{stem}.csv")
    from .plots import correlation_svg

    correlation_svg(curve, out / f"{stem}.svg", label=f"next {args.next} vs self {args.self_id} ({args.kpi})")
    try:
        log.info("peak lag %.1f s", peak_lag(curve))
    except PqosError:
        log.warning("no lag has enough overlap for a defined correlation")
    return 0


def cmd_build_dataset(args) -> int:
    traces = load_traces(args.traces)
    s = resample(_pick(traces, args.self_id), args.period_s)
    n = resample(_pick(traces, args.next), args.period_s)
    ds = build_dataset(s, n, FeatureSetKind.parse(args.feature_set), period_s=args.period_s)
    store_dataset_csv(ds, args.out)
    log.info("%d rows written to %s (dropped: %s)", len(ds), args.out, ds.drop_counts)
    return 0


def cmd_train(args) -> int:
    ds = load_dataset_csv(_need_file(args.dataset))
    cfg = GbtConfig()
    if args.config:
        with open(_need_file(args.config), encoding="utf-8") as fh:
            cfg = GbtConfig.from_dict(json.load(fh))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    model = fit(ds, cfg)
    model.save(args.model)
    log.info("model with %d trees written to %s", len(model.trees), args.model)
    return 0


def cmd_evaluate(args) -> int:
    if args.model:
        if not args.dataset:
            raise PqosError("--model requires --dataset")
        model = GbtModel.load(_need_file(args.model))
        ds = load_dataset_csv(_need_file(args.dataset))
        res = mrpe(model.predict(ds.X), ds.y)
        doc = {"mrpe_percent": res.mrpe_percent, "n_rows": res.n_rows, "clamp_mbps": res.clamp_mbps}
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        log.info("MRPE %.2f%% over %d rows", res.mrpe_percent, res.n_rows)
        return 0
    if not args.traces:
        raise PqosError("evaluate needs --traces (experiment grid) or --model with --dataset")
    traces = load_traces(args.traces)
    cfg = load_experiment_config(_need_file(args.config)) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed, gbt=replace(cfg.gbt, seed=args.seed))
    report = run_experiment(traces, cfg)
    report.save(args.out)
    n_ok = sum(c.status == "ok" for c in report.cells)
    log.info("%d/%d grid cells succeeded; report at %s", n_ok, len(report.cells), args.out)
    return 0


def cmd_report(args) -> int:
    from .plots import write_report_artifacts

    doc = load_report(_need_file(args.experiment))
    for p in write_report_artifacts(doc, args.out):
        log.info("wrote %s", p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pqos", description="Predictive QoS laboratory for vehicle convoys.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("simulate", help="generate a synthetic multi-vehicle campaign")
    s.add_argument("--config", help="JSON with optional 'environment' and 'campaign' objects")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True, help="output directory, one CSV per vehicle")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("analyze", help="lagged cross-correlation between two vehicles")
    s.add_argument("--traces", required=True, help="trace CSV file or directory")
    s.add_argument("--self", dest="self_id", required=True)
    s.add_argument("--next", required=True)
    s.add_argument("--kpi", default="rsrp_dbm", choices=_KPIS)
    s.add_argument("--max-lag-s", type=float, default=600.0)
    s.add_argument("--period-s", type=float, default=1.0)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("build-dataset", help="look-ahead dataset for one (self, next) pair")
    s.add_argument("--traces", required=True)
    s.add_argument("--self", dest="self_id", required=True)
    s.add_argument("--next", required=True)
    s.add_argument("--feature-set", required=True, choices=[k.value for k in FeatureSetKind])
    s.add_argument("--period-s", type=float, default=1.0)
    s.add_argument("--out", required=True, help="output CSV")
    s.set_defaults(func=cmd_build_dataset)

    s = sub.add_parser("train", help="fit a boosted-tree model on a dataset CSV")
    s.add_argument("--dataset", required=True)
    s.add_argument("--model", required=True, help="output model JSON")
    s.add_argument("--config", help="JSON with GBT hyperparameters")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="run the experiment grid, or score one model")
    s.add_argument("--traces")
    s.add_argument("--config", help="experiment config JSON")
    s.add_argument("--model")
    s.add_argument("--dataset")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True, help="output JSON")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("report", help="render MRPE bars, scatter and importance artifacts")
    s.add_argument("--experiment", required=True, help="experiment report JSON")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PqosError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
