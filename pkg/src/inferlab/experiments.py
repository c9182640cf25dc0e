"""JSON-configured experiment pipelines: attribute-inference sweeps over the
label flip probability and inversion sweeps over cut depth and parameter
noise. Outputs are CSV tables, PGM reconstruction grids and SVG plots.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import seeding
from .attacks import (InversionAttackConfig, activation_oracle, collect_queries, eval_attr_attack, invert,
                      train_inverse)
from .data import (estimate_priors, load_pgm, load_tabular, split_train_test, synth_images, synth_tabular,
                   to_bytes, write_pgm)
from .defenses import LabelPerturbConfig, ModelPerturbConfig, perturb_model
from .metrics import accuracy, batch_metrics, mean_std
from .models import CUT_POINTS, build_mlp, build_split_cnn, save_model, train_classifier
from .nn import TrainConfig
from .plots import line_plot

KINDS = ("attr-attack", "inversion-attack")
DEFAULT_SEED = 42

ATTR_COLUMNS = ["target_attr", "flip_p", "rep", "attack_acc", "test_acc"]
ATTR_SUMMARY_COLUMNS = ["target_attr", "flip_p", "n_reps", "attack_acc_mean", "attack_acc_std",
                        "test_acc_mean", "test_acc_std", "baseline_mean"]
INV_COLUMNS = ["cut_layer", "sigma", "accuracy", "mse", "psnr", "ssim"]


class ConfigError(ValueError):
    """Invalid experiment config. ``errors`` holds ``(json_pointer, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p or '/'}: {m}" for p, m in self.errors))


# -- config validation --------------------------------------------------------

def _defaults(kind):
    common = {
        "kind": kind,
        "seed": DEFAULT_SEED,
        "output_dir": "out",
        "model": {"hidden_width": 128},
    }
    if kind == "attr-attack":
        common.update(
            dataset={"source": "synthetic", "n": 5000, "train_fraction": 0.8},
            train={"batch_size": 64, "epochs": 20, "learning_rate": 1e-3, "optimizer": "adam"},
            attack={"target_attrs": None, "mode": "soft"},
            defense={"flip_probs": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]},
            repetitions=10,
        )
    else:
        common.update(
            dataset={"source": "synthetic", "n": 2000, "n_test": 200, "image_side": 32},
            train={"batch_size": 32, "epochs": 2, "learning_rate": 1e-3, "optimizer": "adam"},
            attack={"n_queries": 500, "n_eval": 50, "grid_pairs": 8, "decoder_fit": "deployed",
                    "train": {"batch_size": 32, "epochs": 20, "learning_rate": 1e-3, "optimizer": "adam"}},
            defense={"sigmas": [0.0]},
            cut_points=list(CUT_POINTS),
        )
    return common


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_train(block, ptr, errors):
    if not isinstance(block, dict):
        errors.append((ptr, "must be an object"))
        return
    for key in ("batch_size", "epochs"):
        v = block.get(key)
        if not _is_int(v) or v < (1 if key == "batch_size" else 0):
            errors.append((f"{ptr}/{key}", "must be a positive integer" if key == "batch_size"
                           else "must be a non-negative integer"))
    lr = block.get("learning_rate")
    if not _is_num(lr) or lr <= 0:
        errors.append((f"{ptr}/learning_rate", "must be a positive number"))
    if block.get("optimizer") not in ("adam", "sgd"):
        errors.append((f"{ptr}/optimizer", "must be 'adam' or 'sgd'"))
    for key in block:
        if key not in ("batch_size", "epochs", "learning_rate", "optimizer"):
            errors.append((f"{ptr}/{key}", "unknown field"))


def _check_sweep(values, ptr, errors, lo, hi=None, integer=False):
    if not isinstance(values, list) or not values:
        errors.append((ptr, "must be a nonempty list"))
        return
    for i, v in enumerate(values):
        ok = _is_int(v) if integer else _is_num(v)
        if not ok or v < lo or (hi is not None and v > hi):
            bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
            errors.append((f"{ptr}/{i}", f"must be a {'integer' if integer else 'number'} {bound}, got {v!r}"))
    if len(set(values)) != len(values):
        errors.append((ptr, "contains duplicates"))


def _check_path(cfg, key, ptr, errors, base, required=True):
    v = cfg.get(key)
    if v is None:
        if required:
            errors.append((f"{ptr}/{key}", "required for file datasets"))
        return
    if not isinstance(v, str) or not (base / v).exists():
        errors.append((f"{ptr}/{key}", f"path does not exist: {v!r}"))
    else:
        cfg[key] = str(base / v)


def check_config(obj, base_dir="."):
    """Fill defaults and collect every problem. Returns ``(config, errors)``."""
    errors = []
    if not isinstance(obj, dict):
        return None, [("", "config must be a JSON object")]
    kind = obj.get("kind")
    if kind not in KINDS:
        errors.append(("/kind", f"unknown experiment kind {kind!r}; valid kinds: {', '.join(KINDS)}"))
        return None, errors
    cfg = _merge(_defaults(kind), obj)
    base = Path(base_dir)

    known = set(_defaults(kind))
    for key in cfg:
        if key not in known:
            errors.append((f"/{key}", "unknown field"))
    seed = cfg["seed"]
    if not _is_int(seed) or not 0 <= seed < 2 ** 64:
        errors.append(("/seed", "must be an integer in [0, 2^64)"))
    if not isinstance(cfg["output_dir"], str) or not cfg["output_dir"]:
        errors.append(("/output_dir", "must be a nonempty string"))
    hw = cfg["model"].get("hidden_width") if isinstance(cfg["model"], dict) else None
    if not _is_int(hw) or hw < 1:
        errors.append(("/model/hidden_width", "must be a positive integer"))
    _check_train(cfg["train"], "/train", errors)

    ds = cfg["dataset"]
    if not isinstance(ds, dict):
        errors.append(("/dataset", "must be an object"))
        ds = {}
    source = ds.get("source")
    if source not in ("synthetic", "files"):
        errors.append(("/dataset/source", "must be 'synthetic' or 'files'"))

    attack, defense = cfg["attack"], cfg["defense"]
    if kind == "attr-attack":
        if not _is_int(cfg["repetitions"]) or cfg["repetitions"] < 1:
            errors.append(("/repetitions", "must be a positive integer"))
        _check_sweep(defense.get("flip_probs"), "/defense/flip_probs", errors, 0.0, 1.0)
        if attack.get("mode") not in ("soft", "hard"):
            errors.append(("/attack/mode", "must be 'soft' or 'hard'"))
        targets = attack.get("target_attrs")
        if targets is not None and (not isinstance(targets, list) or not targets
                                    or not all(isinstance(t, str) for t in targets)):
            errors.append(("/attack/target_attrs", "must be null or a nonempty list of attribute names"))
        frac = ds.get("train_fraction")
        if not _is_num(frac) or not 0 < frac < 1:
            errors.append(("/dataset/train_fraction", "must lie strictly between 0 and 1"))
        if source == "synthetic":
            if not _is_int(ds.get("n")) or ds["n"] < 2:
                errors.append(("/dataset/n", "must be an integer >= 2"))
        elif source == "files":
            _check_path(ds, "csv", "/dataset", errors, base)
            _check_path(ds, "schema", "/dataset", errors, base)
    else:
        _check_sweep(defense.get("sigmas"), "/defense/sigmas", errors, 0.0)
        cuts = cfg["cut_points"]
        if not isinstance(cuts, list) or not cuts:
            errors.append(("/cut_points", "must be a nonempty list"))
        else:
            for i, c in enumerate(cuts):
                if c not in CUT_POINTS or not _is_int(c):
                    errors.append((f"/cut_points/{i}", f"must be one of {list(CUT_POINTS)}, got {c!r}"))
        for key in ("n_queries", "n_eval", "grid_pairs"):
            if not _is_int(attack.get(key)) or attack[key] < 1:
                errors.append((f"/attack/{key}", "must be a positive integer"))
        _check_train(attack.get("train"), "/attack/train", errors)
        if attack.get("decoder_fit") not in ("deployed", "clean"):
            errors.append(("/attack/decoder_fit", "must be 'deployed' or 'clean'"))
        if source == "synthetic":
            for key, lo in (("n", 2), ("n_test", 1)):
                if not _is_int(ds.get(key)) or ds[key] < lo:
                    errors.append((f"/dataset/{key}", f"must be an integer >= {lo}"))
            side = ds.get("image_side")
            if not _is_int(side) or side < 8 or side % 8:
                errors.append(("/dataset/image_side", "must be a positive multiple of 8"))
        elif source == "files":
            for key in ("images", "labels", "test_images", "test_labels"):
                _check_path(ds, key, "/dataset", errors, base)
            _check_path(ds, "query_images", "/dataset", errors, base, required=False)
            _check_path(ds, "query_labels", "/dataset", errors, base, required=ds.get("query_images") is not None)
    return cfg, errors


def validate_config(source, base_dir=None):
    """Load (path or dict), fill defaults, collect all errors.

    Returns the normalized config; raises :class:`ConfigError` listing every
    invalid field otherwise. Relative data paths resolve against the config
    file's directory.
    """
    if isinstance(source, dict):
        obj, base = source, base_dir or "."
    else:
        path = Path(source)
        try:
            obj = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError([("", f"config file not found: {path}")]) from None
        except json.JSONDecodeError as e:
            raise ConfigError([("", f"invalid JSON: {e}")]) from None
        base = base_dir or path.parent
    cfg, errors = check_config(obj, base)
    if errors:
        raise ConfigError(errors)
    return cfg


# -- output helpers -----------------------------------------------------------

def fmt(v):
    """CSV cell: 9 significant digits for floats, plain text otherwise."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".9g")
    return str(v)


def atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode() if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    return buf.getvalue()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _train_config(block, rng_seed):
    return TrainConfig(batch_size=block["batch_size"], epochs=block["epochs"],
                       learning_rate=block["learning_rate"], optimizer=block["optimizer"], rng_seed=rng_seed)


# -- attribute inference sweep ------------------------------------------------

def load_attr_dataset(cfg):
    ds = cfg["dataset"]
    if ds["source"] == "synthetic":
        data, _ = synth_tabular(ds["n"], seeding.derive_seed(cfg["seed"], "data"))
        return data
    return load_tabular(ds["csv"], ds["schema"])


def attr_targets(cfg, schema):
    targets = cfg["attack"]["target_attrs"]
    if targets is None:
        targets = list(schema.sensitive)
    if not targets:
        raise ConfigError([("/attack/target_attrs", "schema has no sensitive attributes")])
    for i, t in enumerate(targets):
        if t not in schema.names:
            raise ConfigError([(f"/attack/target_attrs/{i}", f"unknown attribute {t!r}")])
        if not schema.attributes[schema.index(t)].sensitive:
            raise ConfigError([(f"/attack/target_attrs/{i}", f"attribute {t!r} is not flagged sensitive")])
    return targets


def train_attr_model(cfg, data, rep):
    """Split and train the MLP of one repetition; returns ``(model, train, test)``."""
    seed = cfg["seed"]
    train, test = split_train_test(data, cfg["dataset"]["train_fraction"], seeding.derive_seed(seed, "split", rep))
    model = build_mlp(train.records.shape[1], data.schema.classes, seeding.derive_seed(seed, "mlp-init", rep))
    train_classifier(model, train, _train_config(cfg["train"], seeding.derive_seed(seed, "mlp-train", rep)))
    return model, train, test


def run_attr_experiment(cfg, out_dir=None, threads=1):
    """Train once per repetition, sweep the flip probability, write reports.

    Returns the detail rows.
    """
    out = Path(out_dir or cfg["output_dir"])
    data = load_attr_dataset(cfg)
    schema = data.schema
    targets = attr_targets(cfg, schema)
    seed, mode = cfg["seed"], cfg["attack"]["mode"]
    flip_probs = cfg["defense"]["flip_probs"]

    def one_rep(rep):
        model, train, test = train_attr_model(cfg, data, rep)
        rows = []
        for t in targets:
            priors = estimate_priors(train, t)
            for p in flip_probs:
                defense = LabelPerturbConfig(float(p), schema.classes)
                r = eval_attr_attack(model, test, t, priors, defense, repetitions=1,
                                     seed=seeding.derive_seed(seed, "flip", rep, t, float(p)), mode=mode)
                rows.append({"target_attr": t, "flip_p": float(p), "rep": rep, "attack_acc": r.attack_acc[0],
                             "test_acc": r.test_acc[0], "baseline": r.baseline})
        return rows

    per_rep = _map(one_rep, range(cfg["repetitions"]), threads)
    order = {(t, float(p)): i for i, (t, p) in enumerate((t, p) for t in targets for p in flip_probs)}
    rows = sorted((r for rs in per_rep for r in rs), key=lambda r: (order[(r["target_attr"], r["flip_p"])], r["rep"]))
    text = csv_text(ATTR_COLUMNS, rows)
    atomic_write(out / "attr_report.csv", text)
    # aggregate from the rounded table so `report` can rebuild it byte for byte
    parsed = list(csv.DictReader(io.StringIO(text)))
    for p, r in zip(parsed, rows):
        p["baseline"] = r["baseline"]
    write_attr_summary(parsed, out, cfg)
    return rows


def summarize_attr(rows):
    groups = {}
    for r in rows:
        groups.setdefault((r["target_attr"], float(r["flip_p"])), []).append(r)
    summary = []
    for (t, p), rs in groups.items():
        am, asd = mean_std([float(r["attack_acc"]) for r in rs])
        tm, tsd = mean_std([float(r["test_acc"]) for r in rs])
        base = [float(r["baseline"]) for r in rs if r.get("baseline") not in (None, "")]
        summary.append({"target_attr": t, "flip_p": p, "n_reps": len(rs), "attack_acc_mean": am,
                        "attack_acc_std": asd, "test_acc_mean": tm, "test_acc_std": tsd,
                        "baseline_mean": float(np.mean(base)) if base else float("nan")})
    return summary


def attr_plot(summary):
    series = []
    for t in dict.fromkeys(s["target_attr"] for s in summary):
        ss = [s for s in summary if s["target_attr"] == t]
        xs = [s["flip_p"] for s in ss]
        series.append((f"attack accuracy ({t})", xs, [s["attack_acc_mean"] for s in ss],
                       [s["attack_acc_std"] for s in ss]))
        series.append((f"test accuracy ({t})", xs, [s["test_acc_mean"] for s in ss],
                       [s["test_acc_std"] for s in ss]))
    return line_plot(series, "flip probability", "accuracy", "attribute inference vs label perturbation")


def write_attr_summary(rows, out, cfg=None):
    out = Path(out)
    summary = summarize_attr(rows)
    atomic_write(out / "attr_summary.csv", csv_text(ATTR_SUMMARY_COLUMNS, summary))
    atomic_write(out / "attr_plot.svg", attr_plot(summary))
    doc = {"kind": "attr-attack", "summary": summary}
    if cfg is not None:
        doc["config"] = cfg
    atomic_write(out / "attr_summary.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return summary


# -- inversion sweep ----------------------------------------------------------

def load_image_sets(cfg):
    """``(train, test, queries)`` image datasets."""
    ds, seed = cfg["dataset"], cfg["seed"]
    nq = cfg["attack"]["n_queries"]
    if ds["source"] == "synthetic":
        side = ds["image_side"]
        return (synth_images(ds["n"], side, seeding.derive_seed(seed, "data", "train")),
                synth_images(ds["n_test"], side, seeding.derive_seed(seed, "data", "test")),
                synth_images(nq, side, seeding.derive_seed(seed, "data", "queries")))
    train = load_pgm(ds["images"], ds["labels"])
    test = load_pgm(ds["test_images"], ds["test_labels"])
    if ds.get("query_images"):
        queries = load_pgm(ds["query_images"], ds["query_labels"])
    else:
        queries = train
    if len(queries) < nq:
        raise ConfigError([("/attack/n_queries", f"only {len(queries)} query images available")])
    return train, test, queries.subset(np.arange(nq))


def train_split_cnn(cfg, train):
    seed = cfg["seed"]
    n_classes = int(train.labels.max()) + 1 if cfg["dataset"]["source"] == "files" else 2
    model = build_split_cnn(train.side, max(n_classes, 2), cfg["cut_points"][0], cfg["model"]["hidden_width"],
                            seeding.derive_seed(seed, "cnn-init"))
    train_classifier(model, train, _train_config(cfg["train"], seeding.derive_seed(seed, "cnn-train")))
    return model


def pair_grid(originals, recovered, pad=2):
    """Two-row uint8 mosaic: originals on top, reconstructions below."""
    k, side = len(originals), originals.shape[-1]
    grid = np.full((2 * side + 3 * pad, k * side + (k + 1) * pad), 255, dtype=np.uint8)
    for i in range(k):
        x0 = pad + i * (side + pad)
        grid[pad:pad + side, x0:x0 + side] = to_bytes(originals[i])
        grid[2 * pad + side:2 * pad + 2 * side, x0:x0 + side] = to_bytes(recovered[i])
    return grid


def grid_name(cut, sigma):
    return f"inv_grid_cut{cut}_sigma{fmt(float(sigma))}.pgm"


def fit_decoder(cfg, model, queries, cut, sigma):
    """Train the inverse net on query/activation pairs from ``model`` cut at ``cut``."""
    seed = cfg["seed"]
    part_a, _ = model.split_at(cut)
    V = collect_queries(activation_oracle(part_a), queries)
    inv_cfg = InversionAttackConfig(len(queries),
                                    _train_config(cfg["attack"]["train"], seeding.derive_seed(seed, "inverse-train", cut, sigma)),
                                    seeding.derive_seed(seed, "inverse-init", cut, sigma))
    return train_inverse(V, queries, inv_cfg)


def run_inversion_cell(cfg, model, test, queries, cut, sigma, decoder=None):
    """Deploy (optionally perturbed) model, attack at ``cut``, score.

    With ``decoder=None`` the inverse net is fit against the deployed model.
    Passing a ``(g, trace)`` pair reuses a decoder fit elsewhere, e.g. on the
    model before the defense went live.
    """
    seed = cfg["seed"]
    att = cfg["attack"]
    deployed = model
    if sigma > 0:
        deployed = perturb_model(model, ModelPerturbConfig(sigma), seeding.rng(seed, "perturb", sigma))
    g, trace = decoder or fit_decoder(cfg, deployed, queries, cut, sigma)
    part_a, _ = deployed.split_at(cut)
    n_eval = min(att["n_eval"], len(test))
    originals = test.images[:n_eval]
    recovered = invert(g, activation_oracle(part_a)(originals))[:, 0]
    m = batch_metrics(originals, recovered)
    k = min(att["grid_pairs"], n_eval)
    row = {"cut_layer": cut, "sigma": float(sigma), "accuracy": accuracy(deployed, test), "mse": m.mse,
           "psnr": m.psnr, "ssim": m.ssim}
    return row, pair_grid(originals[:k], recovered[:k]), trace


def run_inversion_experiment(cfg, out_dir=None, threads=1, model=None):
    """Train the split CNN once, then attack every (cut, sigma) cell."""
    out = Path(out_dir or cfg["output_dir"])
    train, test, queries = load_image_sets(cfg)
    if model is None:
        model = train_split_cnn(cfg, train)
    out.mkdir(parents=True, exist_ok=True)
    cuts = list(cfg["cut_points"])
    cells = [(c, float(s)) for c in cuts for s in cfg["defense"]["sigmas"]]
    decoders = {}
    if cfg["attack"]["decoder_fit"] == "clean":
        # one decoder per cut, fit on the unperturbed model (same seeds as the sigma=0 cell)
        decoders = dict(zip(cuts, _map(lambda c: fit_decoder(cfg, model, queries, c, 0.0), cuts, threads)))

    def one(cell):
        row, grid, trace = run_inversion_cell(cfg, model, test, queries, *cell, decoder=decoders.get(cell[0]))
        write_pgm(out / grid_name(*cell), grid)
        return row, trace

    results = _map(one, cells, threads)
    rows = [r for r, _ in results]
    atomic_write(out / "inv_report.csv", csv_text(INV_COLUMNS, rows))
    write_inv_summary(rows, out, cfg, traces=[t for _, t in results])
    return rows


def inv_plot(rows):
    series = []
    for cut in dict.fromkeys(int(r["cut_layer"]) for r in rows):
        rs = sorted((r for r in rows if int(r["cut_layer"]) == cut), key=lambda r: float(r["sigma"]))
        series.append((f"cut {cut}", [float(r["sigma"]) for r in rs], [float(r["ssim"]) for r in rs], None))
    return line_plot(series, "parameter noise sigma", "SSIM", "inversion quality vs model perturbation")


def write_inv_summary(rows, out, cfg=None, traces=None):
    out = Path(out)
    atomic_write(out / "inv_plot.svg", inv_plot(rows))
    doc = {"kind": "inversion-attack",
           "cells": [{c: (float(r[c]) if c != "cut_layer" else int(r[c])) for c in INV_COLUMNS} for r in rows]}
    for cell in doc["cells"]:
        if math.isinf(cell["psnr"]):
            cell["psnr"] = "inf"
    if traces is not None:
        for cell, tr in zip(doc["cells"], traces):
            cell["inverse_loss_trace"] = tr
    if cfg is not None:
        doc["config"] = cfg
    atomic_write(out / "inv_summary.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -- verbs --------------------------------------------------------------------

def train_only(cfg, out_dir=None):
    """Train the experiment's model (repetition 0 for attr sweeps) and checkpoint it."""
    out = Path(out_dir or cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg["kind"] == "attr-attack":
        model, _, test = train_attr_model(cfg, load_attr_dataset(cfg), 0)
    else:
        train, test, _ = load_image_sets(cfg)
        model = train_split_cnn(cfg, train)
    path = out / "model.nnck"
    save_model(model, path)
    return path, accuracy(model, test)


def rebuild_report(out_dir):
    """Regenerate aggregates and plots from CSVs already in ``out_dir``."""
    out = Path(out_dir)
    made = []
    if (out / "attr_report.csv").exists():
        rows = read_csv(out / "attr_report.csv")
        # the detail table has no baseline column; carry it over from a previous aggregate
        if (out / "attr_summary.csv").exists():
            base = {(s["target_attr"], float(s["flip_p"])): s["baseline_mean"]
                    for s in read_csv(out / "attr_summary.csv")}
            for r in rows:
                r["baseline"] = base.get((r["target_attr"], float(r["flip_p"])))
        write_attr_summary(rows, out)
        made += ["attr_summary.csv", "attr_plot.svg", "attr_summary.json"]
    if (out / "inv_report.csv").exists():
        write_inv_summary(read_csv(out / "inv_report.csv"), out)
        made += ["inv_plot.svg", "inv_summary.json"]
    if not made:
        raise FileNotFoundError(f"no attr_report.csv or inv_report.csv in {out}")
    return made
