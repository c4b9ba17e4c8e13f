#!/usr/bin/env python3
"""
Test script to verify that the advpose package is installed correctly.
"""

import sys
import importlib.util

def check_module(module_name):
    """Check if a module can be imported."""
    try:
        importlib.import_module(module_name)
        return True
    except ImportError:
        return False

def main():
    """Main function to test the installation."""
    print("Testing advpose installation...")

    if not check_module("advpose"):
        print("❌ advpose package is not installed.")
        sys.exit(1)

    # PyYAML is imported as 'yaml'
    dependencies = ["numpy", "scipy", "yaml", "colorama", "tabulate", "tqdm"]
    missing = [dep for dep in dependencies if not check_module(dep)]

    if missing:
        print(f"❌ Missing dependencies: {', '.join(missing)}")
        sys.exit(1)

    try:
        from advpose import __version__
        print(f"✅ advpose version {__version__} is installed correctly!")

        from advpose import cli
        from advpose.experiment import ablation, runner
        from advpose.models import discriminator, generator, variants
        from advpose.utils import colors

        print("✅ All required modules are available.")
    except ImportError as e:
        print(f"❌ Error importing advpose modules: {e}")
        sys.exit(1)

    from advpose.experiment.runner import cmd_gradcheck
    if cmd_gradcheck() != 0:
        print("❌ Gradient self-test failed.")
        sys.exit(1)
    print("Installation test completed successfully.")

if __name__ == "__main__":
    main()
