"""Standalone `clebsch` entry point: `clebsch <command> --config ...`."""
import os
import sys


def main(argv=None):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'app.settings')
    from django.core.management import execute_from_command_line

    argv = sys.argv if argv is None else argv
    execute_from_command_line([argv[0], 'clebsch', *argv[1:]])
