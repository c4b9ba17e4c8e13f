"""
Adversarial Pose Distillation (advpose)

A desk-scale, reproducible toolkit for distilling 3D human pose estimation
from a labeled lab domain to an unlabeled wild domain with a multi-source
discriminator.
"""

__version__ = "1.0.0"
__author__ = "Adam Spera"
__description__ = "Adversarial distillation for 3D human pose estimation"
