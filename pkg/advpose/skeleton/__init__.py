"""
Skeleton module for advpose.

This module contains the articulated-body topology, pose containers and the
pinhole camera model shared by every other module.
"""
