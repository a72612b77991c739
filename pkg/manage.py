#!/usr/bin/env python
"""Command-line entry point: solve, analyze, bounds, experiment, verify."""
import sys


def main():
    """Run one subcommand."""
    try:
        from tlscond.cli import main as run
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django, numpy or scipy. Are they installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
