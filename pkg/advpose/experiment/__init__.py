"""
Experiment module for advpose.

This module contains the YAML experiment configuration, the command
handlers behind the CLI verbs and the ablation matrix.
"""
