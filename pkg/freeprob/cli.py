"""
Entry point that keeps the exit-code contract of the management commands.

Django's own runner turns every ``CommandError`` into exit status 1 and
ignores check verdicts; ``run`` maps usage errors to 64, numeric failures to
70 and verdicts to 0/1/2.
"""

import os
import sys
from typing import Sequence

COMMANDS = ('nc', 'algebra', 'transform', 'canonical', 'freeness', 'bandmatrix')
USAGE_ERROR = 64


def setup():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'free_probability_lab.settings')
    import django
    django.setup()


def run(argv: Sequence[str], stdout=None, stderr=None, prog: str = 'manage.py') -> int:
    """Run one freeprob subcommand; ``argv`` starts with the subcommand name."""
    from django.apps import apps
    if not apps.ready:
        setup()
    from django.core.management import load_command_class
    from django.core.management.base import CommandError

    stderr = stderr or sys.stderr
    argv = list(argv)
    if not argv or argv[0] not in COMMANDS:
        stderr.write(f"usage: {prog} {{{','.join(COMMANDS)}}} ...\n")
        return USAGE_ERROR

    name = argv[0]
    command = load_command_class('freeprob', name)
    parser = command.create_parser(prog, name)
    try:
        options = parser.parse_args(argv[1:])
    except CommandError as exc:
        stderr.write(f"{exc}\n")
        return USAGE_ERROR
    except SystemExit as exc:
        # --help exits 0, argparse errors in sub-actions exit 2
        return 0 if exc.code in (0, None) else USAGE_ERROR

    cmd_options = vars(options)
    args = cmd_options.pop('args', ())
    cmd_options['stdout'] = stdout
    cmd_options['stderr'] = stderr
    try:
        command.execute(*args, **cmd_options)
    except CommandError as exc:
        stderr.write(f"CommandError: {exc}\n")
        return exc.returncode if exc.returncode != 1 else USAGE_ERROR
    return getattr(command, 'exit_code', 0)
