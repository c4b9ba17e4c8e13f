"""
Utilities module for advpose.

This module contains console helpers shared by the command-line interface.
"""
