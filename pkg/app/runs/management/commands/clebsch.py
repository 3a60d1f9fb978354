"""
Run a Clebsch-top experiment from a config file.

    python manage.py clebsch simulate --config configs/standard.yaml --out out/
"""
import json
import logging

from django.core.management.base import BaseCommand

from app.errors import ClebschError
from app.runs.commands import run
from app.runs.config import COMMANDS, load_run_config

VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG, 3: logging.DEBUG}


class Command(BaseCommand):
    help = 'Run a Clebsch-top experiment (simulate, invariants, linearize, kummer, actions, special)'

    def add_arguments(self, parser):
        parser.add_argument('experiment', choices=COMMANDS, metavar='command', help='Experiment to run')
        parser.add_argument('--config', type=str, required=True, help='Path to a YAML or JSON run config')
        parser.add_argument('--out', type=str, default=None, help='Output directory (default: config output or ./out)')
        parser.add_argument('--seed', type=int, default=None, help='Override the config seed')
        parser.add_argument('--workers', type=int, default=1, help='Processes for independent sweeps')

    def handle(self, *args, **options):
        logging.getLogger('app').setLevel(VERBOSITY_LEVELS.get(options['verbosity'], logging.DEBUG))
        command = options['experiment']
        try:
            config = load_run_config(options['config'], seed=options['seed'])
            out_dir = options['out'] or config.output or 'out'
            artifacts = run(command, config, out_dir, workers=max(1, options['workers']))
        except ClebschError as exc:
            self.stderr.write(json.dumps(exc.to_dict(), sort_keys=True, default=str))
            raise SystemExit(exc.exit_code)

        for path in artifacts:
            self.stdout.write(f"  wrote {path}")
        self.stdout.write(self.style.SUCCESS(f'{command} finished: {len(artifacts)} artifact(s)'))
