#!/usr/bin/env python3
"""
Run the advpose test suite under coverage.

    python run_tests_with_coverage.py                  # everything, terminal + HTML report
    python run_tests_with_coverage.py --quick          # skip tests marked slow
    python run_tests_with_coverage.py tests/test_models.py -k gradcheck
"""

import argparse
import subprocess
import sys

PACKAGE = "advpose"


def build_command(args):
    """pytest invocation for the parsed options."""
    cmd = [sys.executable, "-m", "pytest", f"--cov={PACKAGE}", "--cov-report=term-missing"]
    if not args.no_html:
        cmd.append("--cov-report=html")
    if args.fail_under is not None:
        cmd.append(f"--cov-fail-under={args.fail_under}")
    if args.quick:
        cmd.extend(["-m", "not slow"])
    if args.keyword:
        cmd.extend(["-k", args.keyword])
    if args.verbose:
        cmd.append("-v")
    cmd.extend(args.paths)
    return cmd


def main(argv=None):
    parser = argparse.ArgumentParser(description="Run the advpose tests with coverage reporting")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")
    parser.add_argument("--quick", action="store_true",
                        help="Skip slow tests (discriminator training to the accuracy target)")
    parser.add_argument("--no-html", action="store_true", help="Terminal report only")
    parser.add_argument("--fail-under", type=float, metavar="PERCENT", help="Minimum total coverage")
    parser.add_argument("-k", dest="keyword", metavar="EXPR", help="Only run tests matching EXPR")
    parser.add_argument("paths", nargs="*", help="Test files or directories (default: tests/)")
    args = parser.parse_args(argv)

    cmd = build_command(args)
    print(f"Running: {' '.join(cmd)}")
    result = subprocess.run(cmd)
    if result.returncode == 0 and not args.no_html:
        print("\nHTML coverage report generated in htmlcov/index.html")
    return result.returncode


if __name__ == "__main__":
    sys.exit(main())
