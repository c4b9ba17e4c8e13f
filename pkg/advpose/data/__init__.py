"""
Data module for advpose.

This module contains the anthropometric pose sampler, capture domains,
stick-figure rendering and the synthetic dataset format.
"""
