"""Attribute inference by posterior maximisation, and black-box model
inversion through a trained decoder."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import seeding
from .defenses import LabelPerturbConfig, perturb_labels
from .metrics import mean_std
from .models import _images_nchw, batch_slices, build_inverse_net
from .nn import Tensor, TrainConfig, l2_recon_loss, make_optimizer, no_grad
from .protocol import downcast

MODES = ("soft", "hard")


# -- attribute inference ------------------------------------------------------

@dataclass(frozen=True)
class AttrAttackConfig:
    target: int          # column index of the attacked attribute
    mode: str = "soft"   # "soft": L(v) = confidence of the observed label; "hard": L(v) = 1{argmax == observed}

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @classmethod
    def for_attribute(cls, schema, name, mode="soft"):
        j = schema.index(name)
        if not schema.attributes[j].sensitive:
            raise ValueError(f"attribute {name!r} is not flagged sensitive in the schema")
        return cls(j, mode)


def model_access(model):
    """Black-box query function ``records -> class probabilities``."""
    return lambda records: model.predict_proba(np.atleast_2d(records))


def score_candidates(access, known, observed, priors, cfg: AttrAttackConfig):
    """Unnormalised posterior scores ``prior(v) * L(v)``, shape (n, levels).

    ``known`` is (n, d): full records whose target column is ignored.
    """
    known = np.atleast_2d(np.asarray(known, dtype=np.int64))
    observed = np.atleast_1d(np.asarray(observed, dtype=np.int64))
    priors = np.asarray(priors, dtype=np.float64)
    n, d = known.shape
    if not 0 <= cfg.target < d:
        raise KeyError(f"unknown attribute index {cfg.target} for records of width {d}")
    k = len(priors)
    # candidates laid out (record, level) row-major
    cand = np.repeat(known, k, axis=0)
    cand[:, cfg.target] = np.tile(np.arange(k), n)
    probs = np.asarray(access(cand), dtype=np.float64).reshape(n, k, -1)
    c = probs.shape[-1]
    if np.any(observed < 0) or np.any(observed >= c):
        raise ValueError(f"observed label outside [0, {c})")
    picked = np.take_along_axis(probs, observed[:, None, None], axis=2)[..., 0]
    if cfg.mode == "soft":
        like = picked
    else:
        like = (probs.argmax(axis=2) == observed[:, None]).astype(np.float64)
    return priors[None, :] * like


def infer_attributes(access, known, observed, priors, cfg: AttrAttackConfig):
    """Vectorised :func:`infer_attribute`; returns ``(levels, scores)``."""
    scores = score_candidates(access, known, observed, priors, cfg)
    return scores.argmax(axis=1), scores  # argmax keeps the lowest index on ties


def infer_attribute(access, known, observed_label, priors, cfg: AttrAttackConfig):
    """Pick the level of the target attribute that maximises ``prior * likelihood``.

    ``known`` is one full record (the target slot is ignored). Returns the
    inferred level and the unnormalised per-level scores.
    """
    levels, scores = infer_attributes(access, np.atleast_2d(known), [observed_label], priors, cfg)
    return int(levels[0]), scores[0]


@dataclass
class AttackReport:
    kind: str
    config: dict
    attack_acc: list = field(default_factory=list)
    test_acc: list = field(default_factory=list)
    baseline: float | None = None
    metrics: list = field(default_factory=list)

    @property
    def attack_mean_std(self):
        return mean_std(self.attack_acc)

    @property
    def test_mean_std(self):
        return mean_std(self.test_acc)

    def summary(self):
        out = {"kind": self.kind, "config": self.config}
        if self.attack_acc:
            m, s = self.attack_mean_std
            tm, ts = self.test_mean_std
            out.update(attack_acc=self.attack_acc, test_acc=self.test_acc, attack_acc_mean=m,
                       attack_acc_std=s, test_acc_mean=tm, test_acc_std=ts, baseline=self.baseline)
        if self.metrics:
            out["metrics"] = self.metrics
        return out

    def to_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def eval_attr_attack(model, test_set, target_attr, priors, defense: LabelPerturbConfig | None = None,
                     repetitions=10, seed=0, mode="soft") -> AttackReport:
    """Attack every test record, ``repetitions`` times.

    Per repetition the model's predicted labels go through the defense (if
    any); the attack sees the perturbed label and queries the model for
    every candidate level. ``baseline`` is the accuracy of always guessing
    the most probable prior level.
    """
    if len(test_set) == 0:
        raise ValueError("empty test set")
    schema = test_set.schema
    cfg = AttrAttackConfig.for_attribute(schema, target_attr, mode)
    priors = np.asarray(priors, dtype=np.float64)
    access = model_access(model)
    records, y = test_set.records, test_set.labels
    truth = records[:, cfg.target]
    predicted = model.predict(test_set)
    # candidate scores depend on the observed label only, so query once per label
    per_label = np.stack([score_candidates(access, records, np.full(len(y), c), priors, cfg)
                          for c in range(schema.classes)])
    report = AttackReport("attr-attack", {
        "target_attr": target_attr, "mode": mode, "repetitions": repetitions, "seed": seed,
        "flip_p": defense.p if defense else None})
    report.baseline = float(np.mean(truth == int(np.argmax(priors))))
    rows = np.arange(len(y))
    for rep in range(repetitions):
        observed = predicted
        if defense is not None:
            observed = perturb_labels(predicted, defense, seeding.rng(seed, "label-flip", defense.stream, rep))
        inferred = per_label[observed, rows].argmax(axis=1)
        report.attack_acc.append(float(np.mean(inferred == truth)))
        report.test_acc.append(float(np.mean(observed == y)))
    return report


# -- model inversion ----------------------------------------------------------

@dataclass(frozen=True)
class InversionAttackConfig:
    n_queries: int = 500
    train: TrainConfig = field(default_factory=lambda: TrainConfig(batch_size=32, epochs=30))
    seed: int = 0

    def __post_init__(self):
        if self.n_queries < self.train.batch_size:
            raise ValueError("query set must hold at least one batch")

    def as_dict(self):
        return asdict(self)


def activation_oracle(model_a, wire_dtype=np.float32, batch_size=256):
    """Black-box view of party A: images -> cut activations as seen on the wire."""

    def query(images):
        x = _images_nchw(images)
        outs = []
        with no_grad():
            for i in range(0, len(x), batch_size):
                outs.append(model_a.forward(Tensor(x[i:i + batch_size])).data)
        return downcast(np.concatenate(outs), wire_dtype)

    return query


def collect_queries(access, X):
    """``V = f(X)``: one activation per query image, order preserved."""
    images = getattr(X, "images", X)
    if len(images) == 0:
        raise ValueError("empty query set")
    V = access(images)
    if len(V) != len(images):
        raise ValueError("oracle returned a different number of activations")
    return V


def train_inverse(V, X, cfg: InversionAttackConfig, image_side=None, strict=True):
    """Fit a decoder ``g`` with minibatch Adam on the pixel-space l2 loss.

    Returns ``(g, trace)`` with the mean per-epoch loss in ``trace``.
    """
    V = np.asarray(V, dtype=np.float64)
    X = _images_nchw(getattr(X, "images", X))
    if len(V) != len(X):
        raise ValueError(f"size mismatch: {len(V)} activations vs {len(X)} images")
    cfg.train.check_dataset_size(len(X))
    side = X.shape[-1] if image_side is None else image_side
    g = build_inverse_net(V.shape[1:], side, cfg.seed, strict=strict)
    opt = make_optimizer(g.params(), cfg.train)
    rng = np.random.default_rng(cfg.train.rng_seed)
    trace = []
    for _ in range(cfg.train.epochs):
        total = 0.0
        for idx in batch_slices(len(X), cfg.train.batch_size, rng):
            loss = l2_recon_loss(g.forward(Tensor(V[idx])), X[idx])
            loss.backward()
            opt.step()
            total += float(loss.data) * len(idx)
        trace.append(total / len(X))
    return g, trace


def invert(g, v0):
    """Recover image(s) from intercepted activation(s) with one forward pass."""
    v = np.asarray(v0, dtype=np.float64)
    single = v.shape == g.input_shape
    if single:
        v = v[None]
    if v.shape[1:] != g.input_shape:
        raise ValueError(f"activation shape {np.asarray(v0).shape} does not match decoder input {g.input_shape}")
    with no_grad():
        out = g.forward(Tensor(v)).data
    return out[0] if single else out
