"""
Terminal colors for advpose status lines and tables.
"""

from colorama import init, Fore, Style

init(autoreset=True)


def _paint(style, message):
    return f"{style}{message}{Style.RESET_ALL}"


def success(message):
    """Green: a stage finished and wrote its artifacts."""
    return _paint(Fore.GREEN, message)


def error(message):
    """Red: a stage failed; the exit code says why."""
    return _paint(Fore.RED, message)


def warning(message):
    return _paint(Fore.YELLOW, message)


def info(message):
    return _paint(Fore.BLUE, message)


def attempt(message):
    """Cyan: announces a training phase or a (variant, seed) cell before it starts."""
    return _paint(Fore.CYAN, message)


def format_header(message):
    """Bright white title above a metrics or ablation table."""
    return _paint(Style.BRIGHT + Fore.WHITE, message)


def verdict(passed, passed_text="PASS", failed_text="FAIL"):
    """
    Colored outcome of a gradient check.

    Args:
        passed: Whether the check passed
        passed_text: Label shown when it passed
        failed_text: Label shown when it failed
    """
    return success(passed_text) if passed else error(failed_text)


def millimeters(value, digits=1):
    """A length in millimeters, or a dash when it was not measured."""
    if value is None:
        return "-"
    return f"{value:.{digits}f} mm"
