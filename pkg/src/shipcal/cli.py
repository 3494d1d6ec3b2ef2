"""Command-line pipeline: gen, fit, predict, eval, tune.

Every run writes a manifest next to its output; reruns with an identical
manifest produce byte-identical artifacts (no timestamps anywhere).
Exit codes: 0 success, 2 input/format error, 3 contract violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import cps, two_stage, venn_abers
from .core import DiscreteDistribution, dist_from_dict, dumps_canonical
from .data import SyntheticConfig, generate_synthetic, read_dataset, \
    timeseries_folds, write_dataset
from .decision import DecisionRuleConfig, default_point, point_from_quantile, \
    tune_eta
from .errors import DataFormatError, DomainError
from .learners import LinearScorer, fit_least_squares
from .metrics import evaluate

VERSION = 1
DEFAULT_SEED_ENV = "SHIPCAL_SEED"
FIT_METHODS = ("scps", "mcps", "ivap", "cvap", "ir", "2stg-scps", "2stg-mcps")


def _default_seed() -> int:
    return int(os.environ.get(DEFAULT_SEED_ENV, "0"))


def _write_text(path, text: str) -> None:
    Path(path).write_text(text)


def _write_manifest(command: str, args: dict, inputs: list, outputs: list) -> None:
    doc = {"command": command, "version": VERSION, "args": args,
           "inputs": [str(p) for p in inputs],
           "outputs": [str(p) for p in outputs]}
    body = dumps_canonical(doc)
    doc["config_hash"] = hashlib.sha256(body.encode()).hexdigest()
    out = Path(outputs[0])
    _write_text(out.with_name(out.name + ".manifest.json"),
                dumps_canonical(doc) + "\n")


def _parse_tau(spec: str):
    """Returns a per-row tau callable.  Accepts a float or ``random[:SEED]``."""
    if spec.startswith("random"):
        seed = int(spec.split(":", 1)[1]) if ":" in spec else _default_seed()
        rng = np.random.default_rng(seed)
        return lambda: float(rng.uniform())
    try:
        value = float(spec)
    except ValueError:
        raise DataFormatError(f"bad --tau value {spec!r}") from None
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"--tau must lie in [0, 1], got {value}")
    return lambda: value


def cmd_gen(ns) -> int:
    with open(ns.config) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{ns.config}: {exc}") from None
    raw.setdefault("seed", _default_seed())
    try:
        config = SyntheticConfig(**raw)
    except TypeError as exc:
        raise DataFormatError(f"{ns.config}: {exc}") from None
    dataset = generate_synthetic(config)
    write_dataset(dataset, ns.out)
    _write_manifest("gen", {"config": raw, "seed": config.seed},
                    [ns.config], [ns.out])
    return 0


def _fold_indices(spec) -> tuple[np.ndarray, np.ndarray]:
    return (np.arange(*spec.train), np.arange(*spec.calibration))


def _fit_regression(dataset, fold):
    train_idx, cal_idx = _fold_indices(fold)
    scorer = fit_least_squares(dataset.features[train_idx],
                               dataset.labels[train_idx])
    cal_preds = scorer.predict(dataset.features[cal_idx])
    return scorer, cal_preds, dataset.labels[cal_idx]


def cmd_fit(ns) -> int:
    dataset = read_dataset(ns.data)
    plan = timeseries_folds(len(dataset), ns.folds)
    last = plan.folds[-1]
    all_splits = [_fold_indices(f) for f in plan.folds]

    doc = {"kind": ns.method, "version": VERSION}
    if ns.method in ("scps", "mcps"):
        scorer, cal_preds, cal_labels = _fit_regression(dataset, last)
        if ns.method == "scps":
            model = cps.fit_scps(cal_preds, cal_labels)
        else:
            model = cps.fit_mcps(cal_preds, cal_labels, ns.bins)
        doc["scorer"] = scorer.to_dict()
        doc.update(model.to_dict())
        doc["kind"] = ns.method
    elif ns.method in ("ivap", "cvap"):
        splits = all_splits if ns.method == "cvap" else [all_splits[-1]]
        mc = venn_abers.fit_multiclass_cvap(dataset.features, dataset.labels,
                                            splits)
        doc["k"] = len(splits)
        doc.update(mc.to_dict())
    elif ns.method == "ir":
        train_idx, cal_idx = _fold_indices(last)
        model = venn_abers.fit_ir_calibrator(
            dataset.features[train_idx], dataset.labels[train_idx],
            dataset.features[cal_idx], dataset.labels[cal_idx])
        doc.update(model.to_dict())
    elif ns.method in ("2stg-scps", "2stg-mcps"):
        statuses = np.sign(dataset.labels).astype(int)
        classifier = venn_abers.fit_multiclass_cvap(dataset.features, statuses,
                                                    all_splits)
        scorer, cal_preds, cal_labels = _fit_regression(dataset, last)
        if ns.method.endswith("scps"):
            regressor = cps.fit_scps(cal_preds, cal_labels)
        else:
            regressor = cps.fit_mcps(cal_preds, cal_labels, ns.bins)
        doc["classifier"] = classifier.to_dict()
        doc["scorer"] = scorer.to_dict()
        doc["regressor"] = regressor.to_dict()
    else:  # pragma: no cover - argparse restricts choices
        raise DomainError(f"unknown method {ns.method}")

    _write_text(ns.out, dumps_canonical(doc) + "\n")
    _write_manifest("fit", {"method": ns.method, "folds": ns.folds,
                            "bins": ns.bins}, [ns.data], [ns.out])
    return 0


def _load_model(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    if "kind" not in doc:
        raise DataFormatError(f"{path}: missing model kind")
    return doc


def cmd_predict(ns) -> int:
    doc = _load_model(ns.model)
    dataset = read_dataset(ns.data)
    tau_fn = _parse_tau(ns.tau)

    kind = doc["kind"]
    # deserialize heavyweight parts once, not per row
    if kind in ("scps", "mcps"):
        scorer = LinearScorer.from_dict(doc["scorer"])
        model = cps.model_from_dict(doc)
        h = scorer.predict(dataset.features)
        cdf = cps.scps_cdf if kind == "scps" else cps.mcps_cdf
        dists = (cdf(model, float(h_i), tau_fn()) for h_i in h)
    elif kind in ("ivap", "cvap"):
        mc = venn_abers.MulticlassCvap.from_dict(doc)
        support = mc.classes.astype(float)
        probs = mc.predict_many(dataset.features)
        dists = (DiscreteDistribution(support, row) for row in probs)
    elif kind == "ir":
        ir = venn_abers.IrCalibrator.from_dict(doc)
        dists = (ir.predict(x) for x in dataset.features)
    elif kind in ("2stg-scps", "2stg-mcps"):
        model = two_stage.TwoStageModel(
            venn_abers.MulticlassCvap.from_dict(doc["classifier"]),
            LinearScorer.from_dict(doc["scorer"]),
            cps.model_from_dict(doc["regressor"]))
        taus = [tau_fn() for _ in range(len(dataset))]
        dists = two_stage.mixture_predict_many(model, dataset.features, taus)
    else:
        raise DataFormatError(f"unknown model kind {kind!r}")

    with open(ns.out, "w") as fh:
        for dist in dists:
            fh.write(dumps_canonical(dist.to_dict()) + "\n")
    _write_manifest("predict", {"tau": ns.tau}, [ns.model, ns.data], [ns.out])
    return 0


def _read_dists(path) -> list:
    dists = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                dists.append(dist_from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: line {i}: {exc}") from None
    if not dists:
        raise DataFormatError(f"{path}: no distributions")
    return dists


def _check_alignment(dists, dataset, dists_path, labels_path) -> None:
    if len(dists) != len(dataset):
        raise DataFormatError(
            f"row-count mismatch: {len(dists)} distributions in {dists_path} "
            f"vs {len(dataset)} labels in {labels_path}")


def cmd_eval(ns) -> int:
    dists = _read_dists(ns.dists)
    dataset = read_dataset(ns.labels)
    _check_alignment(dists, dataset, ns.dists, ns.labels)
    try:
        levels = tuple(int(tok) / 100.0 for tok in ns.levels.split(","))
    except ValueError:
        raise DataFormatError(f"bad --levels value {ns.levels!r}") from None
    if any(not (0.0 < lv < 1.0) for lv in levels):
        raise DomainError("interval levels must lie strictly between 0 and 100")
    if ns.eta is None:
        points = [default_point(d) for d in dists]
    else:
        points = [point_from_quantile(d, ns.eta) for d in dists]
    report = evaluate(dists, dataset.labels, points, levels)
    _write_text(ns.out, dumps_canonical(report.to_dict()) + "\n")
    _write_manifest("eval", {"levels": ns.levels, "eta": ns.eta},
                    [ns.dists, ns.labels], [ns.out])
    return 0


def cmd_tune(ns) -> int:
    dists = _read_dists(ns.dists)
    dataset = read_dataset(ns.labels)
    _check_alignment(dists, dataset, ns.dists, ns.labels)
    config = DecisionRuleConfig(ns.beta, ns.gamma, ns.step)
    eta_star, objectives = tune_eta(dists, dataset.labels, config)
    doc = {"beta": config.beta, "gamma": config.gamma,
           "grid_step": config.grid_step,
           "etas": [float(e) for e in config.grid()],
           "objectives": [float(v) for v in objectives],
           "eta_star": eta_star}
    _write_text(ns.out, dumps_canonical(doc) + "\n")
    _write_manifest("tune", {"beta": ns.beta, "gamma": ns.gamma,
                             "step": ns.step}, [ns.dists, ns.labels], [ns.out])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shipcal",
        description="Calibrated predictive distributions for delivery-day "
                    "deviations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="fit a model on a dataset")
    p.add_argument("--method", required=True, choices=FIT_METHODS)
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="emit one distribution per data row")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tau", default="0.5")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate distributions against labels")
    p.add_argument("--dists", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--levels", default="80,90,95")
    p.add_argument("--eta", type=float, default=None,
                   help="use the eta%%-quantile point rule instead of defaults")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tune", help="grid-search the cost-sensitive quantile")
    p.add_argument("--dists", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except FileNotFoundError as exc:
        print(f"shipcal: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"shipcal: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"shipcal: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
