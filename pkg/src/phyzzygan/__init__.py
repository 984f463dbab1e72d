"""Physics-informed fuzzy GANs for bearing remaining-useful-life prognostics.

Subpackages and modules:

- ``ndcore``: float64 tensors with tape-based reverse-mode gradients and Adam
- ``fuzzy``: product t-norm, probabilistic sum, Reichenbach and sigmoidal implications
- ``sigproc``: VMD denoising and the sp extraction chain
- ``physics``: spall width and exponential-growth remaining life
- ``gan``: CGAN, FuzzyGAN, PhysiCGAN and PhyzzyGAN with one training loop
- ``data``: IMS ingestion, labels, splits and a synthetic run-to-failure generator
- ``cli``: the ``phyzzygan`` command
"""
__version__ = "0.1.0"
