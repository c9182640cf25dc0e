"""
Attribute inference against a tabular classifier
================================================

Train the small MLP on synthetic records where one binary attribute is
tied to the label, then recover that attribute for held-out records from
the rest of the record plus the model's answer. Randomized response on
the answers pushes the attack back toward the prior.
"""

import numpy as np

from inferlab.attacks import AttrAttackConfig, eval_attr_attack, infer_attribute, model_access
from inferlab.data import estimate_priors, split_train_test, synth_tabular
from inferlab.defenses import LabelPerturbConfig
from inferlab.models import build_mlp, train_classifier
from inferlab.nn import TrainConfig

# records: 9 binary attributes, the first one flagged sensitive
data, schema = synth_tabular(3000, seed=0)
train, test = split_train_test(data, 0.8, seed=1)
print("attributes:", schema.names)

model = build_mlp(len(schema.attributes), schema.classes, seed=0)
_, trace = train_classifier(model, train, TrainConfig(epochs=10))
print("final train accuracy: %.3f" % trace[-1]["accuracy"])

# one record: hide the sensitive value and let the attack guess it
priors = estimate_priors(train, "sensitive")
cfg = AttrAttackConfig.for_attribute(schema, "sensitive")
record = test.records[0]
observed = int(model.predict(test.subset([0]))[0])
guess, scores = infer_attribute(model_access(model), record, observed, priors, cfg)
print("true %d, guessed %d, scores %s" % (record[cfg.target], guess, np.round(scores, 4)))

# the whole test split, with and without label flipping
for p in (0.0, 0.2, 0.4):
    report = eval_attr_attack(model, test, "sensitive", priors, LabelPerturbConfig(p), repetitions=5, seed=3)
    m, s = report.attack_mean_std
    print("flip p=%.1f  attack accuracy %.3f +- %.3f  (prior baseline %.3f)" % (p, m, s, report.baseline))
