import json
import logging

import numpy as np
from django.core.management.base import BaseCommand, CommandError

from freeprob.conf import setting
from freeprob.exceptions import ConfigurationError, FreeProbabilityError, HypothesisError
from freeprob.models import ExperimentRun
from freeprob.serializers import dump_csv, dump_json

logger = logging.getLogger('freeprob.commands')

USAGE_ERROR = 64
NUMERIC_ERROR = 70
HYPOTHESIS_FAILS = 2


class FreeprobCommand(BaseCommand):
    """A command with sub-actions, machine-readable output and the exit-code contract.

    Subclasses declare their actions in ``add_actions`` and implement
    ``handle_<action>``. A handler returns a JSON-able payload (or a pandas
    frame for CSV output) and may set ``self.verdict``; ``self.exit_code`` is
    what ``freeprob.cli.run`` returns.
    """

    verdict_codes = {}
    action_aliases = {}
    requires_system_checks = []

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='action', required=True)
        self.add_actions(subparsers)

    def add_actions(self, subparsers):
        raise NotImplementedError

    def add_action(self, subparsers, name, help_text):
        aliases = [alias for alias, target in self.action_aliases.items() if target == name]
        action = subparsers.add_parser(name, aliases=aliases, help=help_text)
        action.add_argument('--format', choices=['json', 'csv', 'text'], default='json',
                            help='Output format (default: json)')
        action.add_argument('--out', help='Write the output to this file instead of stdout')
        action.add_argument('--no-timestamp', action='store_true',
                            help='Leave out the generated_at field so output is byte-stable')
        action.add_argument('--threads', type=int, default=setting('THREADS'),
                            help='Worker threads for the numeric kernels')
        action.add_argument('--record', action='store_true',
                            help='Store this run as an ExperimentRun')
        return action

    def handle(self, *args, **options):
        self.exit_code = 0
        self.verdict = ''
        action = self.action_aliases.get(options['action'], options['action'])
        handler = getattr(self, f"handle_{action.replace('-', '_')}")
        try:
            payload = handler(**options)
        except HypothesisError as exc:
            raise CommandError(str(exc), returncode=HYPOTHESIS_FAILS) from exc
        except (ConfigurationError, ValueError, KeyError) as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR) from exc
        except (FreeProbabilityError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise CommandError(str(exc), returncode=NUMERIC_ERROR) from exc
        if self.verdict:
            self.exit_code = self.verdict_codes.get(self.verdict, 0)
        if options['record']:
            self.record(action, options, payload)
        self.emit(payload, options)

    def emit(self, payload, options):
        out = options['out']
        if options['format'] == 'csv':
            frame = self.to_frame(payload)
            if frame is None:
                raise CommandError('This action has no CSV output', returncode=USAGE_ERROR)
            dump_csv(frame, out or self.stdout)
        elif options['format'] == 'text':
            self.write_text(payload)
        else:
            dump_json(payload, out or self.stdout, timestamp=not options['no_timestamp'])
        if out and options['format'] != 'text':
            self.stderr.write(self.style.SUCCESS(f'Wrote {out}'))

    def to_frame(self, payload):
        return None

    def write_text(self, payload):
        text = json.dumps(payload, indent=2, sort_keys=True, default=str)
        if self.verdict:
            style = self.style.SUCCESS if self.exit_code == 0 else (
                self.style.ERROR if self.exit_code == 1 else self.style.WARNING)
            self.stdout.write(style(f'Verdict: {self.verdict}'))
        self.stdout.write(text)

    def record(self, action, options, payload):
        parameters = {key: value for key, value in options.items()
                      if key not in ('verbosity', 'settings', 'pythonpath', 'traceback', 'no_color',
                                     'force_color', 'skip_checks', 'record')}
        run = ExperimentRun.objects.create(
            command=self.command_name,
            action=action,
            parameters=json.loads(json.dumps(parameters, default=str)),
            results=json.loads(json.dumps(payload, default=str)) if isinstance(payload, dict) else {},
            seed=options.get('seed'),
            verdict=self.verdict,
        )
        logger.info("Recorded %s", run)
