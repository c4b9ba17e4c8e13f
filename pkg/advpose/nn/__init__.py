"""
Network module for advpose.

This module contains a small deterministic engine for dense networks:
parameters, layers, losses, the Adam optimizer, gradient checking and
binary checkpoints.
"""
