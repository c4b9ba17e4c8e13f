"""
Training module for advpose.

This module contains the learning procedures: the pose loss, generator
pretraining, the discriminator and generator losses and the alternating
adversarial loop.
"""
