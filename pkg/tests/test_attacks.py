import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inferlab.attacks import (AttrAttackConfig, InversionAttackConfig, collect_queries, eval_attr_attack,
                              infer_attribute, invert, model_access, score_candidates, train_inverse)
from inferlab.data import Attribute, AttributeSchema, ImageDataset, TabularDataset
from inferlab.defenses import LabelPerturbConfig
from inferlab.models import build_inverse_net
from inferlab.nn import Conv2d, Sequential, Tensor, TrainConfig, no_grad


def xor_access(records):
    """y = x0 XOR x1 with confidence 1; x2 is ignored."""
    r = np.atleast_2d(records)
    y = r[:, 0] ^ r[:, 1]
    out = np.zeros((len(r), 2))
    out[np.arange(len(r)), y] = 1.0
    return out


def brute_force(table, known, target, observed, priors, mode):
    """Independent oracle: loop over levels, keep the first strict maximum."""
    best, best_score = None, -1.0
    for v in range(len(priors)):
        rec = list(known)
        rec[target] = v
        probs = table[tuple(rec)]
        like = probs[observed] if mode == "soft" else float(int(np.argmax(probs)) == observed)
        score = priors[v] * like
        if score > best_score:
            best, best_score = v, score
    return best


def test_xor_example():
    level, scores = infer_attribute(xor_access, [1, 0, 0], 1, [0.5, 0.5], AttrAttackConfig(1))
    assert level == 0
    assert scores.tolist() == [0.5, 0.0]


def test_prior_decides_under_indifference():
    flat = lambda r: np.full((len(np.atleast_2d(r)), 2), 0.5)  # noqa: E731
    level, _ = infer_attribute(flat, [0, 0, 0], 1, [1 - 1e-6, 1e-6], AttrAttackConfig(2))
    assert level == 0
    level, _ = infer_attribute(flat, [0, 0, 0], 1, [0.5, 0.5], AttrAttackConfig(2))
    assert level == 0  # all tied


def test_unknown_attribute_errors():
    with pytest.raises(KeyError):
        infer_attribute(xor_access, [0, 0, 0], 0, [0.5, 0.5], AttrAttackConfig(5))


def test_target_must_be_sensitive():
    schema = AttributeSchema((Attribute("a", "categorical", ("0", "1")),), "y", 2)
    with pytest.raises(ValueError):
        AttrAttackConfig.for_attribute(schema, "a")


def _random_table(rng):
    table = {}
    for rec in itertools.product((0, 1), repeat=3):
        p = rng.random(2)
        table[rec] = p / p.sum()
    return table


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from(["soft", "hard"]))
def test_oracle_equivalence_random_tables(seed, mode):
    rng = np.random.default_rng(seed)
    table = _random_table(rng)
    access = lambda r: np.array([table[tuple(x)] for x in np.atleast_2d(r)])  # noqa: E731
    priors = rng.dirichlet([1, 1])
    for rec in itertools.product((0, 1), repeat=3):
        for target in range(3):
            for observed in (0, 1):
                got, _ = infer_attribute(access, rec, observed, priors, AttrAttackConfig(target, mode))
                assert got == brute_force(table, rec, target, observed, priors, mode)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(1e-3, 1e3))
def test_prior_scaling_invariance(seed, k):
    rng = np.random.default_rng(seed)
    table = _random_table(rng)
    access = lambda r: np.array([table[tuple(x)] for x in np.atleast_2d(r)])  # noqa: E731
    known = np.array(list(itertools.product((0, 1), repeat=3)))
    priors = rng.dirichlet([1, 1])
    cfg = AttrAttackConfig(0)
    a = score_candidates(access, known, np.zeros(8, int), priors, cfg).argmax(1)
    b = score_candidates(access, known, np.zeros(8, int), priors * k, cfg).argmax(1)
    assert np.array_equal(a, b)


class XorModel:
    """Stand-in classifier exposing the black-box surface eval_attr_attack uses."""

    def predict_proba(self, records):
        return xor_access(records)

    def predict(self, ds):
        return xor_access(ds.records).argmax(1)


def _xor_dataset():
    schema = AttributeSchema((Attribute("x0", "categorical", ("0", "1")),
                              Attribute("x1", "categorical", ("0", "1"), sensitive=True),
                              Attribute("x2", "categorical", ("0", "1"))), "y", 2)
    rec = np.array(list(itertools.product((0, 1), repeat=3)) * 5)
    return TabularDataset(rec, rec[:, 0] ^ rec[:, 1], schema)


def test_eval_xor_perfect_and_p0_matches_none():
    ds = _xor_dataset()
    plain = eval_attr_attack(XorModel(), ds, "x1", [0.5, 0.5], repetitions=10, seed=3)
    assert plain.attack_acc == [1.0] * 10
    assert plain.attack_mean_std == (1.0, 0.0)
    zero = eval_attr_attack(XorModel(), ds, "x1", [0.5, 0.5], LabelPerturbConfig(0.0), repetitions=10, seed=3)
    assert zero.attack_acc == plain.attack_acc and zero.test_acc == plain.test_acc
    summary = plain.summary()
    assert len(summary["attack_acc"]) == 10


def test_eval_with_flips_reduces_accuracy():
    ds = _xor_dataset()
    r = eval_attr_attack(XorModel(), ds, "x1", [0.5, 0.5], LabelPerturbConfig(1.0), repetitions=2, seed=0)
    assert r.attack_acc == [0.0, 0.0] and r.test_acc == [0.0, 0.0]


def test_eval_rejects_empty():
    ds = _xor_dataset().subset(np.arange(0))
    with pytest.raises(ValueError):
        eval_attr_attack(XorModel(), ds, "x1", [0.5, 0.5])


# -- inversion ----------------------------------------------------------------

def identity_oracle(images):
    x = np.asarray(images, dtype=np.float64)
    return x[:, None] if x.ndim == 3 else x


def test_collect_queries_cardinality_and_pairing():
    X = np.random.default_rng(0).random((100, 8, 8))
    V = collect_queries(identity_oracle, X)
    assert len(V) == 100
    assert np.array_equal(V[7], identity_oracle(X[7:8])[0])
    with pytest.raises(ValueError):
        collect_queries(identity_oracle, np.zeros((0, 8, 8)))


def test_identity_conv_inversion_converges():
    rng = np.random.default_rng(0)
    vals = np.where(rng.random(200) < 0.5, 0.2, 0.8)
    X = np.ones((200, 8, 8)) * vals[:, None, None]
    conv = Conv2d(1, 1, rng, kernel=1, padding=0)
    conv.weight.data[:] = 1.0
    f = Sequential([conv], (1, 8, 8))

    def access(images):
        with no_grad():
            return f(Tensor(np.asarray(images)[:, None])).data

    V = collect_queries(access, X)
    cfg = InversionAttackConfig(200, TrainConfig(batch_size=4, epochs=50, learning_rate=0.1, rng_seed=1), seed=2)
    g, trace = train_inverse(V, X, cfg, strict=False)
    assert trace[-1] < 1e-3
    assert trace[-1] <= trace[0]


def test_zero_epochs_leaves_init():
    V = np.random.default_rng(0).random((40, 32, 8, 8))
    X = np.random.default_rng(1).random((40, 16, 16))
    cfg = InversionAttackConfig(40, TrainConfig(batch_size=8, epochs=0), seed=5)
    g, trace = train_inverse(V, X, cfg)
    fresh = build_inverse_net((32, 8, 8), 16, 5)
    assert trace == []
    for k, p in g.params().items():
        assert np.array_equal(p.data, fresh.params()[k].data)


def test_train_inverse_deterministic_and_size_mismatch():
    V = np.random.default_rng(0).random((16, 32, 4, 4))
    X = np.random.default_rng(1).random((16, 8, 8))
    cfg = InversionAttackConfig(16, TrainConfig(batch_size=8, epochs=2, rng_seed=3), seed=4)
    _, t1 = train_inverse(V, X, cfg)
    _, t2 = train_inverse(V, X, cfg)
    assert t1 == t2
    with pytest.raises(ValueError):
        train_inverse(V[:8], X, cfg)


def test_invert_contract():
    g = build_inverse_net((32, 4, 4), 16, 0)
    v = np.random.default_rng(0).random((32, 4, 4))
    out = invert(g, v)
    assert out.shape == (1, 16, 16)
    assert out.min() >= 0 and out.max() <= 1
    assert np.array_equal(out, invert(g, v))
    with pytest.raises(ValueError):
        invert(g, np.zeros((16, 4, 4)))


def test_inversion_config_requires_a_batch():
    with pytest.raises(ValueError):
        InversionAttackConfig(4, TrainConfig(batch_size=8))


def test_model_access_wraps_predict_proba():
    assert np.array_equal(model_access(XorModel())([1, 1, 0]), [[1.0, 0.0]])


def test_image_dataset_queries():
    ds = ImageDataset(np.random.default_rng(0).random((5, 8, 8)), np.zeros(5, int))
    assert collect_queries(identity_oracle, ds).shape == (5, 1, 8, 8)
