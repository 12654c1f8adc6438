"""Sound-field image toolkit: simulation, noise synthesis, joint
denoising + silhouette segmentation, baselines, and evaluation."""

__version__ = "0.1.0"
