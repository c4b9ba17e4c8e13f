"""
Evaluation module for advpose.

This module contains pose alignment, the error and accuracy metrics and the
metrics report.
"""
