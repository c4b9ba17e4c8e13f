"""
Encoding module for advpose.

This module turns poses and generator outputs into the discriminator's
information sources: heatmaps, depth maps and the pairwise geometric
descriptor.
"""
