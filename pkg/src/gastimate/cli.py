"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error. Subcommands mirror the
pipeline: synth, ingest, categorize, train, validate, rank, compare, savings,
lookup, recommend, serve. Human-readable tables by default; --json for
machine output where applicable.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, ingest, ranking, savings, service, stats, synthchain
from .chainmodel import processing_time_minutes
from .errors import GastimateError
from .estimator import LinearModel, lookup_table
from .features import AnchorMode, collect_samples
from .pricing import DEFAULT_LOOKBACK, PriceCategory, boundaries, categorize, quantile


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def _load_model(path: str) -> LinearModel:
    return LinearModel.from_json(Path(path).read_text(encoding="utf-8"))


def _read_report_csv(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"tx_hash", "category", "actual_minutes", "mean_ae_minutes"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise GastimateError(
                f"{path}: expected header tx_hash,category,actual_minutes,mean_ae_minutes"
            )
        return [
            {
                "tx_hash": row["tx_hash"],
                "category": row["category"],
                "actual_minutes": float(row["actual_minutes"]),
                "mean_ae_minutes": float(row["mean_ae_minutes"]),
            }
            for row in reader
        ]


# ---------------------------------------------------------------------------
# subcommands

def _cmd_synth(args) -> int:
    config = synthchain.SynthConfig(
        seed=args.seed,
        n_blocks=args.blocks,
        block_capacity=args.capacity,
        arrival_rate=args.arrival_rate,
        price_log_mu=args.price_mu,
        price_log_sigma=args.price_sigma,
        block_interval_s=args.interval,
        n_senders=args.senders,
        nonce_ordering=not args.no_nonce_ordering,
    )
    result = synthchain.simulate(config)
    ingest.save_chain(result.chain, args.out)
    mined = sum(len(b.transactions) for b in result.chain.blocks)
    print(
        f"wrote {len(result.chain.blocks)} blocks, {mined} mined txs "
        f"({len(result.unmined)} left pending) to {args.out}"
    )
    return 0


def _cmd_ingest(args) -> int:
    chain = ingest.load_chain(args.file)
    n_txs = sum(len(b.transactions) for b in chain.blocks)
    if args.json:
        head = chain.head
        print(
            json.dumps(
                {
                    "blocks": len(chain.blocks),
                    "txs": n_txs,
                    "head": head.number if head else None,
                    "span_s": (head.timestamp - chain.blocks[0].timestamp) if head else 0,
                }
            )
        )
    else:
        print(f"{args.file}: {len(chain.blocks)} blocks, {n_txs} txs, valid")
    return 0


def _cmd_categorize(args) -> int:
    chain = ingest.load_chain(args.chain)
    prices: dict[PriceCategory, list[float]] = {c: [] for c in PriceCategory}
    minutes: dict[PriceCategory, list[float]] = {c: [] for c in PriceCategory}
    skipped = 0
    for block in chain.blocks:
        if not block.transactions:
            continue
        try:
            cuts = boundaries(chain, block.number, args.lookback)
        except GastimateError:
            skipped += len(block.transactions)
            continue
        for tx in block.transactions:
            cat = categorize(tx.gas_price_gwei, cuts)
            prices[cat].append(tx.gas_price_gwei)
            minutes[cat].append(processing_time_minutes(tx))
    rows = []
    payload = {}
    for cat in PriceCategory:
        p = sorted(prices[cat])
        if not p:
            continue
        m = sorted(minutes[cat])
        entry = {
            "count": len(p),
            "price_min": p[0],
            "price_q1": quantile(p, 0.25),
            "price_median": quantile(p, 0.5),
            "price_q3": quantile(p, 0.75),
            "price_max": p[-1],
            "price_mean": float(np.mean(p)),
            "price_std": float(np.std(p)),
            "p90_minutes": quantile(m, 0.9),
        }
        payload[cat.label] = entry
        rows.append(
            [
                cat.label,
                str(entry["count"]),
                f"{entry['price_min']:.1f}",
                f"{entry['price_q1']:.1f}",
                f"{entry['price_median']:.1f}",
                f"{entry['price_q3']:.1f}",
                f"{entry['price_max']:.1f}",
                f"{entry['price_mean']:.1f}",
                f"{entry['price_std']:.1f}",
                f"{entry['p90_minutes']:.2f}",
            ]
        )
    if args.json:
        print(json.dumps({"skipped_txs": skipped, "categories": payload}, indent=2))
    else:
        print(
            _table(
                ["category", "n", "min", "q1", "median", "q3", "max", "mean", "std", "p90 min"],
                rows,
            )
        )
        if skipped:
            print(f"({skipped} txs skipped: no usable lookback window)")
    return 0


def _cmd_train(args) -> int:
    chain = ingest.load_chain(args.chain)
    samples, skipped = collect_samples(chain, args.lookback, AnchorMode.BY_CONTAINING_BLOCK)
    picked = [
        s
        for s in samples
        if (args.from_ts is None or s.pending_ts >= args.from_ts)
        and (args.to_ts is None or s.pending_ts <= args.to_ts)
    ]
    if len(picked) < 2:
        raise GastimateError("fewer than 2 usable training samples in range")
    from .estimator import fit

    pend = [s.pending_ts for s in picked]
    model = fit(
        [(s.feature_pct, s.actual_minutes) for s in picked],
        train_range=(min(pend), max(pend)),
        lookback=args.lookback,
    )
    Path(args.out).write_text(model.to_json() + "\n", encoding="utf-8")
    print(
        f"trained on {model.n_train} txs ({skipped} skipped): "
        f"a={model.intercept_a:.6f} b={model.slope_b:.6f} -> {args.out}"
    )
    return 0


def _cmd_validate(args) -> int:
    chain = ingest.load_chain(args.chain)
    spec = evaluation.WindowSpec(
        seed=args.seed,
        window_days=args.window_days,
        train_days=args.train_days,
        test_days=args.window_days - args.train_days,
        bootstrap_reps=args.reps,
    )
    report = evaluation.validate(chain, spec, args.lookback, max_workers=args.threads)
    if args.out:
        Path(args.out).write_text(report.to_csv(), encoding="utf-8")
    if args.aggregates:
        Path(args.aggregates).write_text(report.aggregates_json() + "\n", encoding="utf-8")
    if args.json:
        print(report.aggregates_json())
    else:
        print(f"windows: {len(report.windows)}  scored txs: {len(report.records)}")
        if report.records:
            metrics = report.metrics()
            print(
                f"MAE {metrics.mae:.4f}  MedAE {metrics.medae:.4f}  "
                f"MAPE {metrics.mape if metrics.mape is None else round(metrics.mape, 2)}  "
                f"MedAPE {metrics.medape if metrics.medape is None else round(metrics.medape, 2)}"
            )
        if args.out:
            print(f"per-tx records -> {args.out}")
    return 0


def _load_ae_groups(paths: list[str], category: str | None) -> tuple[list[str], list[list[float]]]:
    names, groups = [], []
    for path in paths:
        rows = _read_report_csv(path)
        if category:
            rows = [r for r in rows if r["category"] == category]
        aes = [r["mean_ae_minutes"] for r in rows]
        if not aes:
            raise GastimateError(f"{path}: no AE rows" + (f" for category {category}" if category else ""))
        name = Path(path).stem
        if name in names:
            name = f"{name}#{len(names)}"
        names.append(name)
        groups.append(aes)
    return names, groups


def _cmd_rank(args) -> int:
    if len(args.files) < 2:
        raise _UsageError("rank needs at least 2 AE report files")
    names, groups = _load_ae_groups(args.files, args.category)
    omnibus = stats.kruskal_wallis(groups)
    dunn = stats.dunn_posthoc(groups, alpha=args.alpha)
    pairwise = []
    for pair in dunn:
        delta, _ = stats.cliffs_delta(groups[pair.i], groups[pair.j])
        pairwise.append((names[pair.i], names[pair.j], pair.p_adjusted, delta))
    graph = ranking.build_graph(pairwise, alpha=args.alpha)
    table = ranking.rank_models(graph)
    if args.json:
        body = json.loads(table.to_json())
        body["kruskal_wallis"] = {"h": omnibus.statistic, "p": omnibus.p_value}
        print(json.dumps(body, indent=2))
    else:
        print(f"Kruskal-Wallis H={omnibus.statistic:.4f} p={omnibus.p_value:.4g}")
        print(
            _table(
                ["rank", "model", "score"],
                [[str(m.rank), m.model, f"{m.score:.6f}"] for m in table.models],
            )
        )
    return 0


def _build_ensemble_aes(args, ours_rows: list[dict]) -> dict[str, float]:
    """AE per tx_hash for the routed two-source ensemble."""
    chain = ingest.load_chain(args.chain)
    preds = ingest.load_predictions(args.preds)
    summary = ingest.join_predictions(chain, preds)
    per_tx: dict[str, dict[str, float]] = {}
    for j in summary.joined:
        per_tx.setdefault(j.tx_hash, {})[j.source_id] = j.predicted_minutes
    router = evaluation.EnsembleRouter.two_way(args.route_cheap, args.route_rest)
    cat_by_hash = {r["tx_hash"]: r["category"] for r in ours_rows}
    actual_by_hash = {r["tx_hash"]: r["actual_minutes"] for r in ours_rows}
    out = {}
    for tx_hash, sources in per_tx.items():
        if tx_hash not in cat_by_hash or not cat_by_hash[tx_hash]:
            continue
        category = PriceCategory.from_label(cat_by_hash[tx_hash])
        try:
            predicted = evaluation.ensemble_predict(router, sources, category)
        except GastimateError:
            continue
        out[tx_hash] = abs(actual_by_hash[tx_hash] - predicted)
    return out


def _cmd_compare(args) -> int:
    ours_rows = _read_report_csv(args.ours)
    if args.theirs:
        theirs_rows = _read_report_csv(args.theirs)
        theirs_by_hash = {r["tx_hash"]: r["mean_ae_minutes"] for r in theirs_rows}
        label = Path(args.theirs).stem
    elif args.preds:
        if not args.chain:
            raise _UsageError("--preds requires --chain")
        theirs_by_hash = _build_ensemble_aes(args, ours_rows)
        label = f"ensemble({args.route_cheap}|{args.route_rest})"
    else:
        raise _UsageError("compare needs --theirs or --preds")
    paired = [
        (r["mean_ae_minutes"], theirs_by_hash[r["tx_hash"]])
        for r in ours_rows
        if r["tx_hash"] in theirs_by_hash
    ]
    if len(paired) < 5:
        raise GastimateError(f"only {len(paired)} paired txs; need >= 5")
    ours_ae = [p[0] for p in paired]
    theirs_ae = [p[1] for p in paired]
    result = evaluation.paired_compare(ours_ae, theirs_ae)
    body = {
        "n_pairs": len(paired),
        "ours_medae": float(np.median(ours_ae)),
        "theirs_medae": float(np.median(theirs_ae)),
        "theirs": label,
        "wilcoxon_p": result.wilcoxon_p,
        "cliffs_delta": result.cliffs_delta,
        "magnitude": result.magnitude,
    }
    if args.json:
        print(json.dumps(body, indent=2))
    else:
        print(
            f"n={body['n_pairs']}  ours MedAE {body['ours_medae']:.4f} vs {label} "
            f"{body['theirs_medae']:.4f}  wilcoxon p={body['wilcoxon_p']:.4g}  "
            f"delta={body['cliffs_delta']:.4f} ({body['magnitude']})"
        )
    return 0


def _cmd_savings(args) -> int:
    chain = ingest.load_chain(args.chain)
    model = _load_model(args.model)
    config = savings.SavingsConfig(
        seed=args.seed,
        confidence=args.confidence,
        margin=args.margin,
        price_step_gwei=args.step,
    )
    report = savings.run_experiment(chain, model, config, args.lookback)
    if args.json:
        print(report.to_json())
    else:
        pct = report.percentages()
        print(f"sampled {report.sampled_blocks} blocks, {report.n_txs} txs")
        print(
            f"saving opportunities {report.opportunities} ({pct['saving_opportunity']:.2f}%)  "
            f"failures {report.failures} ({pct['failure_to_save']:.2f}%)  "
            f"inconclusive {report.inconclusive} ({pct['inconclusive']:.2f}%)"
        )
        if report.saved_fraction is not None:
            print(f"fee saved among opportunities: {100 * report.saved_fraction:.1f}%")
    return 0


def _cmd_lookup(args) -> int:
    chain = ingest.load_chain(args.chain)
    model = _load_model(args.model)
    head = chain.head
    if head is None:
        raise GastimateError("chain is empty")
    table = lookup_table(
        model,
        chain,
        head.number,
        price_min=args.min,
        price_max=args.max,
        price_step=args.step,
        lookback=args.lookback or model.lookback,
    )
    if args.json:
        print(json.dumps(table.to_dict(), indent=2))
    else:
        print(
            _table(
                ["gas price (GWEI)", "category", "predicted minutes"],
                [
                    [f"{r.gas_price_gwei:g}", r.category.label, f"{r.predicted_minutes:.3f}"]
                    for r in table.rows
                ],
            )
        )
        if not table.monotone_ok:
            print("warning: predictions are not monotone non-increasing in price")
    return 0


def _cmd_recommend(args) -> int:
    if args.deadline_minutes <= 0:
        raise _UsageError("--deadline-minutes must be > 0")
    if args.kth < 1:
        raise _UsageError("--kth must be >= 1")
    chain = ingest.load_chain(args.chain)
    model = _load_model(args.model)
    head = chain.head
    if head is None:
        raise GastimateError("chain is empty")
    table = lookup_table(
        model,
        chain,
        head.number,
        price_min=args.min,
        price_max=args.max,
        price_step=args.step,
        lookback=args.lookback or model.lookback,
    )
    result = service.recommend_from_table(table, args.deadline_minutes, args.kth)
    if result is None:
        print(json.dumps({"reason": "no_price_meets_deadline"}))
        return 0
    print(json.dumps(result))
    return 0


def _cmd_serve(args) -> int:
    state = service.ServiceState()
    if args.chain:
        state.ingest_chain(Path(args.chain).read_text(encoding="utf-8"))
        if args.train:
            state.train(None, None, args.lookback)
    server = service.make_server(bind=args.bind, port=args.port, state=state)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> _Parser:
    parser = _Parser(prog="gastimate", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic chain")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--capacity", type=int, default=10)
    p.add_argument("--arrival-rate", type=float, default=8.0)
    p.add_argument("--interval", type=float, default=15.0)
    p.add_argument("--price-mu", type=float, default=2.0)
    p.add_argument("--price-sigma", type=float, default=1.0)
    p.add_argument("--senders", type=int, default=100)
    p.add_argument("--no-nonce-ordering", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate a blocks JSONL file")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("categorize", help="per-category price stats and p90 times")
    p.add_argument("--chain", required=True)
    p.add_argument("--lookback", type=int, default=DEFAULT_LOOKBACK)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_categorize)

    p = sub.add_parser("train", help="fit the linear model on a chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lookback", type=int, default=DEFAULT_LOOKBACK)
    p.add_argument("--from-ts", type=int, default=None)
    p.add_argument("--to-ts", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("validate", help="sliding-window bootstrap validation")
    p.add_argument("--chain", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--window-days", type=int, default=5)
    p.add_argument("--train-days", type=int, default=4)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--lookback", type=int, default=DEFAULT_LOOKBACK)
    p.add_argument("--threads", type=int, default=1, help="window-level parallelism cap")
    p.add_argument("--out", default=None, help="per-tx records CSV")
    p.add_argument("--aggregates", default=None, help="aggregates JSON file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("rank", help="rank models from AE report files")
    p.add_argument("files", nargs="*")
    p.add_argument("--category", default=None, help="restrict to one price category label")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("compare", help="paired comparison of two AE reports")
    p.add_argument("--ours", required=True)
    p.add_argument("--theirs", default=None)
    p.add_argument("--preds", default=None, help="external predictions CSV for the ensemble")
    p.add_argument("--chain", default=None)
    p.add_argument("--route-cheap", default="gas_tracker")
    p.add_argument("--route-rest", default="gas_price_api")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("savings", help="retrospective fee savings experiment")
    p.add_argument("--chain", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--lookback", type=int, default=DEFAULT_LOOKBACK)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_savings)

    p = sub.add_parser("lookup", help="price/prediction lookup table at head")
    p.add_argument("--chain", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--min", type=float, default=1.0)
    p.add_argument("--max", type=float, default=60.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--lookback", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_lookup)

    p = sub.add_parser("recommend", help="kth cheapest price meeting a deadline")
    p.add_argument("--chain", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--deadline-minutes", type=float, required=True)
    p.add_argument("--kth", type=int, default=1)
    p.add_argument("--min", type=float, default=1.0)
    p.add_argument("--max", type=float, default=60.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--lookback", type=int, default=None)
    p.set_defaults(func=_cmd_recommend)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=int(os.environ.get("GASTIMATE_PORT", "8080")))
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--chain", default=None, help="preload a blocks JSONL file")
    p.add_argument("--train", action="store_true", help="train on the preloaded chain")
    p.add_argument("--lookback", type=int, default=DEFAULT_LOOKBACK)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except GastimateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
