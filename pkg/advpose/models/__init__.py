"""
Models module for advpose.

This module contains the adversaries: the two-stage pose generator, the
multi-source discriminator and the ablation variants built from them.
"""
