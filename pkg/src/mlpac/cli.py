"""Command line interface.

Subcommands:

* ``gen-data``  - write a synthetic dataset plus masked variants.
* ``train``     - one training run; writes checkpoint, epoch CSV, metrics JSON.
* ``eval``      - score a saved checkpoint against a dataset.
* ``sweep``     - methods x ratios x seeds grid with CSV aggregation.

Option resolution, lowest to highest precedence: built-in defaults,
``--profile`` presets, config file (INI ``[common]`` plus the subcommand's
own section), explicit flags. ``MLPAC_SEED`` acts as the seed fallback when
neither flags nor config set one. All outputs are deterministic given
identical arguments, except wall-clock columns.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import dataclasses
import json
import math
import os
import statistics
import sys
import time

import numpy as np

from . import learners, metrics, net
from .data import (
    FullDataset,
    PartialDataset,
    generate_multilabel,
    load_dataset,
    make_binary_pu,
    mask_positives,
    save_dataset,
)
from .exceptions import ConfigurationError, InputError, MlpacError
from .rewards import RewardSpec
from .training import (
    TrainConfig,
    run_baseline,
    run_mlpac,
    run_self_training,
    split_train_val,
    write_epoch_csv,
)

PROFILES = {
    "multilabel": {
        "global_weight": 10.0,
        "sample_steps": 10,
        "enhance_threshold": 0.95,
        "unknown_ratio": 0.4,
    },
    "binary-pu": {
        "global_weight": 20.0,
        "sample_steps": 100,
        "enhance_threshold": 0.8,
        "unknown_ratio": 0.2,
    },
}

CLI_METHODS = ("mlpac", "negative", "pos_weight", "neg_weight", "self_training")
_BASELINE_OF = {"negative": "negative_mode", "pos_weight": "pos_weight", "neg_weight": "neg_weight"}

SUMMARY_COLUMNS = ["method", "ratio", "seed", "P", "R", "F1", "mAP", "wall_seconds"]


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_ratio(text):
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {value}")
    return value


def _ratio_arg(text):
    try:
        return _parse_ratio(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _parse_ratio_list(text):
    return [_parse_ratio(part) for part in str(text).split(",") if part != ""]


def _ratio_list_arg(text):
    try:
        return _parse_ratio_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _parse_int_list(text):
    return [int(part) for part in str(text).split(",") if part != ""]


def _parse_float_list(text):
    return [float(part) for part in str(text).split(",") if part != ""]


def _parse_dims(text):
    dims = tuple(int(part) for part in str(text).split(",") if part != "")
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"hidden dims must be positive integers, got {text!r}")
    return dims


def _dims_arg(text):
    try:
        return _parse_dims(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _parse_methods(text):
    methods = [part.strip() for part in str(text).split(",") if part.strip()]
    for m in methods:
        if m not in CLI_METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {CLI_METHODS}")
    return methods


def _methods_arg(text):
    try:
        return _parse_methods(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


# Canonical option keys, their defaults and config-file value parsers.
_TRAIN_DEFAULTS = {
    "seed": 0,
    "method": "mlpac",
    "ratio": None,
    "binary_class": None,
    "val_fraction": 0.2,
    "hidden_dims": (32,),
    "total_epochs": 30,
    "iterative_epochs": 10,
    "pretrain_epochs": 3,
    "sample_steps": 10,
    "policy_lr": 0.2,
    "critic_lr": 1.0,
    "enhance_threshold": 0.95,
    "global_weight": 10.0,
    "weight_decay": "linear",
    "unknown_ratio": 0.4,
    "batch_size": 64,
    "global_reward_kind": "recall",
    "no_local_reward": False,
    "no_global_reward": False,
    "no_enhancement": False,
    "no_iterative_critic": False,
    "baseline_epochs": 60,
}

_GEN_DEFAULTS = {
    "seed": 0,
    "n": 2000,
    "features": 20,
    "classes": 10,
    "positive_rate": 0.12,
    "cluster_spread": 0.35,
    "ratios": [0.1, 0.5, 1.0],
}

_SWEEP_DEFAULTS = dict(_TRAIN_DEFAULTS)
_SWEEP_DEFAULTS.pop("method")
_SWEEP_DEFAULTS.pop("ratio")
_SWEEP_DEFAULTS.update({
    "methods": ["mlpac", "negative"],
    "ratios": [0.1, 0.3, 0.5],
    "seeds": [0, 1, 2],
    "rho_values": None,
    "w_values": None,
    "jobs": 1,
})

_EVAL_DEFAULTS = {"seed": 0}

_CONVERTERS = {
    "seed": int,
    "method": str,
    "ratio": _parse_ratio,
    "binary_class": int,
    "val_fraction": float,
    "hidden_dims": _parse_dims,
    "total_epochs": int,
    "iterative_epochs": int,
    "pretrain_epochs": int,
    "sample_steps": int,
    "policy_lr": float,
    "critic_lr": float,
    "enhance_threshold": float,
    "global_weight": float,
    "weight_decay": str,
    "unknown_ratio": float,
    "batch_size": int,
    "global_reward_kind": str,
    "no_local_reward": _parse_bool,
    "no_global_reward": _parse_bool,
    "no_enhancement": _parse_bool,
    "no_iterative_critic": _parse_bool,
    "baseline_epochs": int,
    "n": int,
    "features": int,
    "classes": int,
    "positive_rate": float,
    "cluster_spread": float,
    "ratios": _parse_ratio_list,
    "methods": _parse_methods,
    "seeds": _parse_int_list,
    "rho_values": _parse_float_list,
    "w_values": _parse_float_list,
    "jobs": int,
}


def _read_config(path, command, known):
    """Merge [common] and the command's own section of an INI file."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"config file not found: {path}")
    merged = {}
    for section in ("common", command):
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigurationError(
                    f"unknown config key {key!r} in section [{section}] of {path}"
                )
            try:
                merged[key] = _CONVERTERS[key](raw)
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {key!r} in {path}: {exc}") from exc
    return merged


def _resolve(args, command, defaults):
    """Apply precedence: defaults < profile < env seed < config < flags."""
    values = dict(defaults)
    profile = getattr(args, "profile", None)
    if profile:
        for key, val in PROFILES[profile].items():
            if key in values:
                values[key] = val
    env_seed = os.environ.get("MLPAC_SEED")
    if env_seed is not None and "seed" in values:
        try:
            values["seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigurationError(f"MLPAC_SEED must be an integer, got {env_seed!r}") from exc
    config_path = getattr(args, "config", None)
    if config_path:
        values.update(_read_config(config_path, command, set(values)))
    for key in values:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    return values


def _add_common(parser, with_profile=True):
    parser.add_argument("--seed", type=int, default=None, help="run seed (fallback: MLPAC_SEED)")
    parser.add_argument("--config", default=None, help="INI config file")
    if with_profile:
        parser.add_argument("--profile", choices=sorted(PROFILES), default=None)


def _add_train_options(parser):
    parser.add_argument("--method", choices=CLI_METHODS, default=None)
    parser.add_argument("--ratio", type=_ratio_arg, default=None,
                        help="annotation ratio used to mask a full dataset")
    parser.add_argument("--binary-class", dest="binary_class", type=int, default=None,
                        help="reduce a full dataset to one-vs-rest membership of this class")
    parser.add_argument("--val-fraction", dest="val_fraction", type=float, default=None)
    parser.add_argument("--hidden-dims", dest="hidden_dims", type=_dims_arg, default=None)
    parser.add_argument("--epochs", dest="total_epochs", type=int, default=None)
    parser.add_argument("--iterative-epochs", dest="iterative_epochs", type=int, default=None)
    parser.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int, default=None)
    parser.add_argument("--sample-steps", dest="sample_steps", type=int, default=None)
    parser.add_argument("--policy-lr", dest="policy_lr", type=float, default=None)
    parser.add_argument("--critic-lr", dest="critic_lr", type=float, default=None)
    parser.add_argument("--gamma", dest="enhance_threshold", type=float, default=None,
                        help="label-enhancement confidence threshold")
    parser.add_argument("--w0", dest="global_weight", type=float, default=None,
                        help="initial global-reward weight")
    parser.add_argument("--w-decay", dest="weight_decay", choices=["linear", "constant"], default=None)
    parser.add_argument("--rho", dest="unknown_ratio", type=float, default=None,
                        help="fraction of unknown classes sampled for local rewards")
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    parser.add_argument("--baseline-epochs", dest="baseline_epochs", type=int, default=None)
    parser.add_argument("--global-reward-kind", dest="global_reward_kind",
                        choices=["recall", "precision", "f1"], default=None)
    parser.add_argument("--no-global-reward", dest="no_global_reward",
                        action="store_true", default=None)
    parser.add_argument("--no-local-reward", dest="no_local_reward",
                        action="store_true", default=None)
    parser.add_argument("--no-enhancement", dest="no_enhancement",
                        action="store_true", default=None)
    parser.add_argument("--no-iterative-critic", dest="no_iterative_critic",
                        action="store_true", default=None)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mlpac",
        description="Multi-label PU classification via policy-gradient training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset plus masked variants")
    _add_common(g, with_profile=False)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--features", type=int, default=None)
    g.add_argument("--classes", type=int, default=None)
    g.add_argument("--positive-rate", dest="positive_rate", type=float, default=None)
    g.add_argument("--cluster-spread", dest="cluster_spread", type=float, default=None)
    g.add_argument("--ratios", type=_ratio_list_arg, default=None)
    g.add_argument("--out-dir", dest="out_dir", required=True)

    t = sub.add_parser("train", help="run one training method on one dataset")
    _add_common(t)
    t.add_argument("--data", required=True, help="dataset file (full or already masked)")
    t.add_argument("--truth", default=None,
                   help="full dataset supplying hidden labels for a masked --data file")
    t.add_argument("--out-dir", dest="out_dir", required=True)
    _add_train_options(t)

    e = sub.add_parser("eval", help="evaluate a checkpoint against a dataset")
    _add_common(e, with_profile=False)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True, help="dataset with ground truth labels")
    e.add_argument("--observed-data", dest="observed_data", default=None,
                   help="masked dataset for a side-by-side observed-proxy report")
    e.add_argument("--out", default=None, help="write the JSON report here as well")

    s = sub.add_parser("sweep", help="methods x ratios x seeds grid")
    _add_common(s)
    s.add_argument("--data", required=True, help="full dataset file to mask per run")
    s.add_argument("--out-dir", dest="out_dir", required=True)
    s.add_argument("--methods", type=_methods_arg, default=None)
    s.add_argument("--ratios", type=_ratio_list_arg, default=None)
    s.add_argument("--seeds", type=_parse_int_list, default=None)
    s.add_argument("--rho-values", dest="rho_values", type=_parse_float_list, default=None,
                   help="sweep the unknown-class sampling ratio (mlpac rows only)")
    s.add_argument("--w-values", dest="w_values", type=_parse_float_list, default=None,
                   help="sweep the initial global-reward weight (mlpac rows only)")
    s.add_argument("--jobs", type=int, default=None)
    _add_train_options(s)
    return parser


def _train_config(values) -> TrainConfig:
    kind = "none" if values["no_global_reward"] else values["global_reward_kind"]
    reward = RewardSpec(
        global_weight=values["global_weight"],
        decay=values["weight_decay"],
        unknown_ratio=values["unknown_ratio"],
        seed=values["seed"],
    )
    return TrainConfig(
        hidden_dims=tuple(values["hidden_dims"]),
        total_epochs=values["total_epochs"],
        iterative_epochs=values["iterative_epochs"],
        pretrain_epochs=values["pretrain_epochs"],
        sample_steps=values["sample_steps"],
        policy_lr=values["policy_lr"],
        critic_lr=values["critic_lr"],
        enhance_threshold=values["enhance_threshold"],
        reward=reward,
        batch_size=values["batch_size"],
        seed=values["seed"],
        global_reward_kind=kind,
        use_local_reward=not values["no_local_reward"],
        use_enhancement=not values["no_enhancement"],
        iterate_critic=not values["no_iterative_critic"],
        baseline_epochs=values["baseline_epochs"],
    )


def _prepare_partial(ds, values):
    """Turn the loaded dataset into the PartialDataset a run trains on."""
    if isinstance(ds, FullDataset):
        ratio = values["ratio"]
        if ratio is None:
            raise ConfigurationError("--ratio is required when --data is a full dataset")
        if values["binary_class"] is not None:
            partial = make_binary_pu(ds, values["binary_class"], ratio, values["seed"])
        else:
            partial = mask_positives(ds, ratio, values["seed"])
        return partial, ratio
    if values["ratio"] is not None:
        raise ConfigurationError("--ratio only applies to full datasets; this file is already masked")
    if values["binary_class"] is not None:
        raise ConfigurationError("--binary-class only applies to full datasets")
    return ds, ds.annotation_ratio


def _attach_truth(partial: PartialDataset, truth_path):
    full = load_dataset(truth_path)
    if not isinstance(full, FullDataset):
        raise InputError(f"--truth must point to a full dataset, got {truth_path}")
    if (full.n, full.d, full.num_classes) != (partial.n, partial.d, partial.num_classes):
        raise InputError("--truth dataset shape does not match --data")
    return dataclasses.replace(partial, true_labels=full.true_labels)


def _dispatch(method, train_part, val_part, config, checkpoint_path=None):
    if method == "mlpac":
        return run_mlpac(train_part, val_part, config, checkpoint_path=checkpoint_path)
    if method == "self_training":
        return run_self_training(train_part, val_part, config, checkpoint_path=checkpoint_path)
    return run_baseline(train_part, val_part, _BASELINE_OF[method], config,
                        checkpoint_path=checkpoint_path)


def _final_reports(policy, partial: PartialDataset):
    probs = net.forward(policy, partial.features)
    predictions = learners.policy_predict(policy, partial.features)
    ground = None
    if partial.true_labels is not None:
        ground = metrics.compute_report(
            predictions, partial.true_labels, scores=probs, target_kind="ground_truth"
        ).to_dict()
    proxy_targets = np.where(partial.observed == 1, 1, -1)
    proxy = metrics.compute_report(
        predictions, proxy_targets, scores=probs, target_kind="observed_proxy"
    ).to_dict()
    return ground, proxy


def cmd_gen_data(args) -> int:
    values = _resolve(args, "gen-data", _GEN_DEFAULTS)
    os.makedirs(args.out_dir, exist_ok=True)
    full = generate_multilabel(
        n=values["n"],
        d=values["features"],
        num_classes=values["classes"],
        positive_rate=values["positive_rate"],
        cluster_spread=values["cluster_spread"],
        seed=values["seed"],
    )
    full_path = os.path.join(args.out_dir, "full.jsonl")
    save_dataset(full, full_path)
    written = [full_path]
    for ratio in values["ratios"]:
        partial = mask_positives(full, ratio, values["seed"])
        path = os.path.join(args.out_dir, f"partial_r{ratio:g}.jsonl")
        save_dataset(partial, path)
        written.append(path)
    for path in written:
        print(path)
    return 0


def cmd_train(args) -> int:
    values = _resolve(args, "train", _TRAIN_DEFAULTS)
    ds = load_dataset(args.data)
    partial, ratio = _prepare_partial(ds, values)
    if args.truth is not None:
        if partial.true_labels is not None:
            raise ConfigurationError("--truth given but the dataset already carries labels")
        partial = _attach_truth(partial, args.truth)
    train_part, val_part = split_train_val(partial, values["val_fraction"])
    config = _train_config(values)
    os.makedirs(args.out_dir, exist_ok=True)
    checkpoint_path = os.path.join(args.out_dir, "checkpoint.json")
    result = _dispatch(values["method"], train_part, val_part, config, checkpoint_path)
    net.save_model(result.best_policy, checkpoint_path)
    write_epoch_csv(result.records, os.path.join(args.out_dir, "epochs.csv"))

    ground, proxy = _final_reports(result.best_policy, partial)
    summary = {
        "method": values["method"],
        "ratio": ratio,
        "seed": values["seed"],
        "best_epoch": result.best_epoch,
        "best_val_score": result.best_val_score,
        "n": partial.n,
        "num_classes": partial.num_classes,
        "ground_truth": ground,
        "observed_proxy": proxy,
    }
    with open(os.path.join(args.out_dir, "metrics.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    head = ground if ground is not None else proxy
    print(
        f"method={values['method']} ratio={ratio:g} "
        f"P={head['precision']:.4f} R={head['recall']:.4f} F1={head['f1']:.4f}"
    )
    return 0


def cmd_eval(args) -> int:
    model = net.load_model(args.checkpoint)
    reports = {"ground_truth": None, "observed_proxy": None}

    def _one(path):
        ds = load_dataset(path)
        if model.input_dim != ds.d or model.output_dim != ds.num_classes:
            raise InputError(
                f"checkpoint expects {model.input_dim} features / {model.output_dim} classes, "
                f"dataset has {ds.d} / {ds.num_classes}"
            )
        probs = net.forward(model, ds.features)
        predictions = learners.policy_predict(model, ds.features)
        if isinstance(ds, FullDataset):
            return metrics.compute_report(
                predictions, ds.true_labels, scores=probs, target_kind="ground_truth"
            )
        targets = np.where(ds.observed == 1, 1, -1)
        return metrics.compute_report(
            predictions, targets, scores=probs, target_kind="observed_proxy"
        )

    primary = _one(args.data)
    reports[primary.target_kind] = primary.to_dict()
    if args.observed_data is not None:
        secondary = _one(args.observed_data)
        reports[secondary.target_kind] = secondary.to_dict()
    text = json.dumps(reports, indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def _run_sweep_task(task, values, data_path):
    full = load_dataset(data_path)
    run_values = dict(values)
    run_values["seed"] = task["seed"]
    run_values["ratio"] = task["ratio"]
    if task.get("rho") is not None:
        run_values["unknown_ratio"] = task["rho"]
    if task.get("w0") is not None:
        run_values["global_weight"] = task["w0"]
    partial, _ = _prepare_partial(full, run_values)
    train_part, val_part = split_train_val(partial, run_values["val_fraction"])
    config = _train_config(run_values)
    os.makedirs(task["out_dir"], exist_ok=True)
    checkpoint_path = os.path.join(task["out_dir"], "checkpoint.json")

    start = time.perf_counter()
    result = _dispatch(task["method"], train_part, val_part, config, checkpoint_path)
    wall = time.perf_counter() - start
    net.save_model(result.best_policy, checkpoint_path)
    write_epoch_csv(result.records, os.path.join(task["out_dir"], "epochs.csv"))

    probs = net.forward(result.best_policy, partial.features)
    predictions = learners.policy_predict(result.best_policy, partial.features)
    report = metrics.compute_report(
        predictions, partial.true_labels, scores=probs, target_kind="ground_truth"
    )
    return {
        "method": task["tag"],
        "ratio": task["ratio"],
        "seed": task["seed"],
        "P": report.precision,
        "R": report.recall,
        "F1": report.f1,
        "mAP": report.mean_ap,
        "wall_seconds": round(wall, 3),
    }


def _sweep_worker(payload):
    task, values, data_path = payload
    try:
        return task, _run_sweep_task(task, values, data_path), None
    except Exception as exc:  # partial failures recorded, sweep continues
        return task, None, f"{type(exc).__name__}: {exc}"


def _aggregate_rows(rows):
    """Mean/std across seeds for each (method, ratio) cell."""
    cells = {}
    for row in rows:
        cells.setdefault((row["method"], row["ratio"]), []).append(row)
    aggregated = []
    for (method, ratio) in sorted(cells):
        group = cells[(method, ratio)]
        entry = {"method": method, "ratio": ratio, "n_seeds": len(group)}
        for column in ("P", "R", "F1", "mAP"):
            values = [g[column] for g in group if g[column] is not None]
            if values:
                entry[f"{column}_mean"] = statistics.fmean(values)
                entry[f"{column}_std"] = statistics.pstdev(values)
            else:
                entry[f"{column}_mean"] = None
                entry[f"{column}_std"] = None
        aggregated.append(entry)
    return aggregated


def cmd_sweep(args) -> int:
    values = _resolve(args, "sweep", _SWEEP_DEFAULTS)
    full = load_dataset(args.data)
    if not isinstance(full, FullDataset):
        raise InputError("sweep needs a full dataset so each run can be masked and scored")

    tasks = []
    for method in values["methods"]:
        variants = [(None, None)]
        if method == "mlpac" and values["rho_values"]:
            variants = [(rho, None) for rho in values["rho_values"]]
        if method == "mlpac" and values["w_values"]:
            variants = [(rho, w0) for rho, _ in variants for w0 in values["w_values"]]
        for rho, w0 in variants:
            tag = method
            if rho is not None:
                tag += f"(rho={rho:g})"
            if w0 is not None:
                tag += f"(w0={w0:g})"
            for ratio in values["ratios"]:
                for seed in values["seeds"]:
                    run_name = f"{tag}_r{ratio:g}_s{seed}".replace("(", "_").replace(")", "").replace("=", "")
                    tasks.append({
                        "method": method,
                        "tag": tag,
                        "rho": rho,
                        "w0": w0,
                        "ratio": ratio,
                        "seed": seed,
                        "out_dir": os.path.join(args.out_dir, run_name),
                    })

    os.makedirs(args.out_dir, exist_ok=True)
    payloads = [(task, values, args.data) for task in tasks]
    outcomes = []
    if values["jobs"] > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=values["jobs"]) as pool:
            outcomes = list(pool.map(_sweep_worker, payloads))
    else:
        outcomes = [_sweep_worker(p) for p in payloads]

    rows, failures = [], []
    for task, row, error in outcomes:
        if error is None:
            rows.append(row)
        else:
            failures.append((task, error))
            rows.append({
                "method": task["tag"], "ratio": task["ratio"], "seed": task["seed"],
                "P": None, "R": None, "F1": None, "mAP": None, "wall_seconds": None,
            })
    rows.sort(key=lambda r: (r["method"], r["ratio"], r["seed"]))

    def fmt(value):
        return "" if value is None else str(value)

    with open(os.path.join(args.out_dir, "summary.csv"), "w", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[c]) for c in SUMMARY_COLUMNS) + "\n")

    ok_rows = [r for r in rows if r["F1"] is not None]
    aggregated = _aggregate_rows(ok_rows)
    rho_tags = {t["tag"] for t in tasks if t["rho"] is not None}
    best_rho_tag = None
    if rho_tags:
        by_tag = {}
        for entry in aggregated:
            if entry["method"] in rho_tags and entry["F1_mean"] is not None:
                by_tag.setdefault(entry["method"], []).append(entry["F1_mean"])
        if by_tag:
            best_rho_tag = max(by_tag, key=lambda tag: statistics.fmean(by_tag[tag]))
    agg_columns = ["method", "ratio", "n_seeds", "P_mean", "P_std", "R_mean", "R_std",
                   "F1_mean", "F1_std", "mAP_mean", "mAP_std", "best"]
    with open(os.path.join(args.out_dir, "aggregate.csv"), "w", newline="") as fh:
        fh.write(",".join(agg_columns) + "\n")
        for entry in aggregated:
            marker = "*" if best_rho_tag is not None and entry["method"] == best_rho_tag else ""
            cells = [fmt(entry.get(c)) for c in agg_columns[:-1]] + [marker]
            fh.write(",".join(cells) + "\n")

    if failures:
        with open(os.path.join(args.out_dir, "errors.log"), "w") as fh:
            for task, error in failures:
                fh.write(f"{task['tag']} ratio={task['ratio']:g} seed={task['seed']}: {error}\n")
    if best_rho_tag is not None:
        print(f"best rho setting: {best_rho_tag}")
    print(f"{len(rows) - len(failures)}/{len(rows)} runs completed -> {args.out_dir}/summary.csv")
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen-data": cmd_gen_data,
        "train": cmd_train,
        "eval": cmd_eval,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except (MlpacError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
