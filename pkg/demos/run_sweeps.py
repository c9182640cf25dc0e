"""
Config-driven sweeps
====================

The same pipelines the ``inferlab`` command runs, called from Python with
a reduced grid. Outputs land in ./demo_out.
"""

from inferlab.experiments import run_attr_experiment, run_inversion_experiment, validate_config

attr = validate_config({
    "kind": "attr-attack",
    "dataset": {"n": 2000},
    "train": {"epochs": 5},
    "repetitions": 3,
    "defense": {"flip_probs": [0.0, 0.25, 0.5]},
})
for row in run_attr_experiment(attr, "demo_out/attr"):
    print(row["flip_p"], row["rep"], round(row["attack_acc"], 3), round(row["test_acc"], 3))

inv = validate_config({
    "kind": "inversion-attack",
    "dataset": {"n": 400, "n_test": 20, "image_side": 16},
    "train": {"epochs": 2},
    "attack": {"n_queries": 200, "n_eval": 20, "train": {"epochs": 8}},
    "defense": {"sigmas": [0.0, 0.05]},
    "cut_points": [2, 6],
})
for row in run_inversion_experiment(inv, "demo_out/inv"):
    print(row)
