"""Command-line experiment runner.

    lshitables eval   --detector lsh-itables --dataset data/breastw.csv --runs 10
    lshitables collab --detector rs-h --dataset data/breastw.csv --k 2 --epsilon 0.01
    lshitables bench  --synthetic 100000 --m 100

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .collaborative import OUTLIER_SKEWED, UNIFORM, PartitionSpec, run_collaboration
from .data import Dataset, load_csv, synth_planted
from .ensemble import DetectorKind
from .evaluation import DetectorConfig, EvalResult, append_results, auc, repeated_eval, run_seeds

RESULTS_ENV = "LSHITABLES_RESULTS_DIR"
DEFAULT_SWEEP = "0.001,0.002,0.003,0.004,inf"

log = logging.getLogger("lshitables")


def results_dir() -> Path:
    return Path(os.environ.get(RESULTS_ENV, "results"))


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def epsilon_value(text: str) -> float:
    """A positive budget, or ``inf`` for a non-private release."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'inf', got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"epsilon must be positive, got {text}")
    return value


def epsilon_list(text: str) -> list[float]:
    return [epsilon_value(t.strip()) for t in text.split(",") if t.strip()]


def detector_list(text: str) -> list[DetectorKind]:
    try:
        return [DetectorKind(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fmt_eps(eps: float) -> str:
    return "inf" if math.isinf(eps) else f"{eps:g}"


def _load(args) -> Dataset:
    if getattr(args, "synthetic", None):
        n = args.synthetic
        return synth_planted(n - max(1, n // 100), max(1, n // 100), args.dim, 4.0, seed=args.seed)
    return load_csv(args.dataset, label_col=args.label_col, dedup=not args.no_dedup)


def _add_common(p: argparse.ArgumentParser, detectors) -> None:
    p.add_argument("--dataset", help="CSV file with a 0/1 label column")
    p.add_argument("--label-col", type=int, default=-1, help="label column index (default: last)")
    p.add_argument("--no-dedup", action="store_true", help="keep duplicate feature vectors")
    p.add_argument("--detector", choices=[d.value for d in detectors], default=DetectorKind.LSH_ITABLES.value)
    p.add_argument("--m", type=positive_int, default=100, help="base models per ensemble")
    p.add_argument("--runs", type=positive_int, default=10)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--results", type=Path, help="results ledger CSV (default: $%s/results.csv)" % RESULTS_ENV)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lshitables", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="repeated train/score runs on one dataset")
    _add_common(ev, DetectorKind)
    ev.add_argument("--epsilon", type=epsilon_value, default=math.inf)
    ev.add_argument("--scores-out", type=Path, help="per-point scores CSV for the last run")
    ev.add_argument("--model-out", type=Path, help="JSON model bundle for the last run")

    co = sub.add_parser("collab", help="simulate k participants sharing released histograms")
    _add_common(co, (DetectorKind.LSH_ITABLES, DetectorKind.RSH))
    co.add_argument("--k", type=positive_int, default=2, help="participants")
    co.add_argument("--epsilon", type=epsilon_list, default=[math.inf],
                    help="one budget for everyone or a comma list with one per participant")
    co.add_argument("--sweep", nargs="?", const=DEFAULT_SWEEP, type=epsilon_list,
                    help=f"sweep a shared budget over a comma list (default {DEFAULT_SWEEP})")
    co.add_argument("--partition", choices=[UNIFORM, OUTLIER_SKEWED], default=UNIFORM)
    co.add_argument("--skew", type=float, default=1.0, help="share of outliers routed to participant 0")
    co.add_argument("--transcript", type=Path, help="JSON-lines log of exchanged messages (last run)")
    co.add_argument("--plot-data", type=Path, help="CSV of (epsilon, auc) rows")

    be = sub.add_parser("bench", help="train/test wall-clock time per detector")
    be.add_argument("--dataset")
    be.add_argument("--label-col", type=int, default=-1)
    be.add_argument("--no-dedup", action="store_true")
    be.add_argument("--synthetic", type=positive_int, help="use a planted synthetic set of this size")
    be.add_argument("--dim", type=positive_int, default=10, help="synthetic dimension")
    be.add_argument("--detectors", type=detector_list, default=list(DetectorKind),
                    help="comma list of detectors (default: all)")
    be.add_argument("--m", type=positive_int, default=100)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--out", type=Path, help="timing CSV")
    return parser


def cmd_eval(args) -> int:
    ds = _load(args)
    cfg = DetectorConfig(DetectorKind(args.detector), args.m, args.epsilon)
    last = {}

    def fit(config, X, seed):
        model = config.train(X, seed)
        scores = model.score(X)
        last.update(model=model, scores=scores)
        return scores, model.orientation

    res = repeated_eval(cfg, ds, args.runs, args.seed, fit=fit)
    append_results(args.results or results_dir() / "results.csv", [res.row()])
    print(f"{res.detector} on {res.dataset} (n={ds.n}, d={ds.d}): "
          f"AUC {100 * res.auc_mean:.2f} +/- {100 * res.auc_std:.2f} over {res.runs} runs, {res.seconds:.2f}s")
    if args.scores_out:
        _write_csv(args.scores_out, ["point_id", "score", "orientation"],
                   [(int(i), f"{s:.10g}", last["model"].orientation.value) for i, s in zip(ds.ids, last["scores"])])
    if args.model_out:
        if not hasattr(last["model"], "save"):
            raise ValueError(f"{args.detector} models cannot be saved as a JSON bundle")
        last["model"].save(args.model_out)
    return 0


def cmd_collab(args) -> int:
    ds = _load(args)
    kind = DetectorKind(args.detector)
    budgets = [[e] for e in args.sweep] if args.sweep else [args.epsilon]
    plot_rows, ledger_rows = [], []
    for eps in budgets:
        eps_arg = eps[0] if len(eps) == 1 else eps
        aucs, seconds = [], 0.0
        for i, run_seed in enumerate(run_seeds(args.seed, args.runs)):
            spec = PartitionSpec(args.k, args.partition, args.skew, seed=run_seed)
            transcript = args.transcript if i == args.runs - 1 and eps is budgets[-1] else None
            t0 = time.perf_counter()
            result = run_collaboration(ds, spec, args.m, eps_arg, run_seed, kind, transcript)
            seconds += time.perf_counter() - t0
            aucs.append(result.mean_auc)
        shown = _fmt_eps(eps[0]) if len(eps) == 1 else "/".join(_fmt_eps(e) for e in eps)
        per = ", ".join(f"p{p}={'n/a' if a is None else f'{100 * a:.2f}'}" for p, a in result.aucs.items())
        print(f"{kind.value} k={args.k} epsilon={shown}: AUC {100 * np.mean(aucs):.2f} "
              f"+/- {100 * np.std(aucs):.2f} over {args.runs} runs; last run {per}; "
              f"privacy total {result.account.total:g}")
        plot_rows.append((shown, f"{np.mean(aucs):.6f}", f"{np.std(aucs):.6f}"))
        res = EvalResult(kind.value, ds.name, args.runs, float(np.mean(aucs)), float(np.std(aucs)), seconds,
                         float(sum(eps)) if len(eps) > 1 else eps[0], args.k)
        ledger_rows.append(res.row())
    append_results(args.results or results_dir() / "results.csv", ledger_rows)
    if args.plot_data:
        _write_csv(args.plot_data, ["epsilon", "auc", "auc_std"], plot_rows)
    return 0


def cmd_bench(args) -> int:
    ds = _load(args)
    rows = []
    for kind in args.detectors:
        cfg = DetectorConfig(kind, args.m)
        t0 = time.perf_counter()
        model = cfg.train(ds.X, args.seed)
        t1 = time.perf_counter()
        scores = model.score(ds.X)
        t2 = time.perf_counter()
        a = auc(scores, ds.y, model.orientation) if 0 < ds.n_outliers < ds.n else float("nan")
        rows.append((kind.value, ds.n, ds.d, args.m, f"{t1 - t0:.4f}", f"{t2 - t1:.4f}", f"{t2 - t0:.4f}", f"{a:.6f}"))
        print(f"{kind.value:12s} train {t1 - t0:7.3f}s  test {t2 - t1:7.3f}s  total {t2 - t0:7.3f}s  AUC {100 * a:.2f}")
    if args.out:
        _write_csv(args.out, ["detector", "n", "d", "m", "train_seconds", "test_seconds", "total_seconds", "auc"], rows)
    return 0


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


COMMANDS = {"eval": cmd_eval, "collab": cmd_collab, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command != "bench" and not args.dataset:
        parser.error("--dataset is required")
    if args.command == "bench" and not (args.dataset or args.synthetic):
        parser.error("bench needs --dataset or --synthetic")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
