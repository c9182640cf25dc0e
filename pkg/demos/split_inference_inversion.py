"""
Split inference and what the wire leaks
=======================================

Party A runs the first convolution blocks on an image and ships the cut
activation to party B, which finishes the forward pass. A passive tap on
the link sees every activation. With black-box query access to party A,
an attacker trains a decoder from activations back to images.

Kept small (16x16 images, few epochs) so it runs in about a minute.
"""

import numpy as np

from inferlab.attacks import InversionAttackConfig, activation_oracle, collect_queries, invert, train_inverse
from inferlab.data import synth_images, write_pgm
from inferlab.experiments import pair_grid
from inferlab.metrics import batch_metrics
from inferlab.models import build_split_cnn, train_classifier
from inferlab.nn import TrainConfig
from inferlab.protocol import collaborative_infer

side = 16
train = synth_images(600, side, seed=0)
test = synth_images(20, side, seed=1)
queries = synth_images(300, side, seed=2)

cnn = build_split_cnn(side, 2, cut_point=2, hidden_width=32, seed=0)
train_classifier(cnn, train, TrainConfig(batch_size=32, epochs=5))

# one collaborative inference; the transcript is what the tap recorded
party_a, party_b = cnn.split_at(2)
probs, transcript = collaborative_infer(party_a, party_b, test.images[0])
for msg in transcript:
    print(msg.direction, msg)
print("class probabilities:", np.round(probs, 4))

# the attack: query party A, fit the decoder, invert the tapped activation
oracle = activation_oracle(party_a)
V = collect_queries(oracle, queries)
g, losses = train_inverse(V, queries, InversionAttackConfig(len(queries), TrainConfig(batch_size=32, epochs=10)))
print("decoder loss per epoch:", np.round(losses, 2))

tapped = transcript[0].tensor
recovered = invert(g, tapped)
print("recovered image shape:", recovered.shape)

rec = invert(g, oracle(test.images))[:, 0]
print(batch_metrics(test.images, rec))
write_pgm("split_inversion_demo.pgm", pair_grid(test.images[:6], rec[:6]))
print("wrote split_inversion_demo.pgm (originals on top)")
