#!/usr/bin/env python
"""Django's command-line utility; the freeprob subcommands go through freeprob.cli."""
import os
import sys


def main():
    """Run administrative tasks or a freeprob subcommand."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'free_probability_lab.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    from freeprob.cli import COMMANDS, run
    if len(sys.argv) > 1 and sys.argv[1] in COMMANDS:
        sys.exit(run(sys.argv[1:]))
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
