"""Privacy attacks and defenses for black-box and split (collaborative) models.

Subpackages and modules:

- ``inferlab.nn``: a small 64-bit reverse-mode autodiff engine with dense,
  convolutional and pooling layers, optimizers and a checkpoint format.
- ``inferlab.models``: the tabular MLP, the split CNN and the inverse decoder.
- ``inferlab.data``: schemas, CSV and PGM loaders, synthetic workloads.
- ``inferlab.protocol``: the framed wire format and the two-party runtime.
- ``inferlab.attacks`` / ``inferlab.defenses``: attribute inference, model
  inversion, randomized response and parameter noise.
- ``inferlab.metrics``: MSE, PSNR, SSIM and accuracy.
- ``inferlab.experiments`` / ``inferlab.cli``: JSON-configured sweeps.
"""
__version__ = "0.1.0"
