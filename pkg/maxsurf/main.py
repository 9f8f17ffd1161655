#!/usr/bin/env python3

import argparse
import logging
import sys
from pathlib import Path

from config import load_config
from errors import ConfigError
from runner import EXIT_STAGE_ERROR, ExperimentRunner

logger = logging.getLogger(__name__)

MODULES = ['chart_metric', 'boundary_data', 'maximal_solver', 'surface_geometry', 'geodesic_engine',
           'estimate_engine', 'scenarios', 'runner', 'report_writer', 'config']


def setup_logging(out_dir, quiet=False, verbose=False):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    file_handler = logging.FileHandler(out_dir / 'maxsurf.log')
    file_handler.setLevel(logging.INFO)
    file_handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(logging.ERROR if quiet else logging.DEBUG if verbose else logging.WARNING)
    console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)

    for module_name in MODULES:
        logging.getLogger(module_name).setLevel(logging.DEBUG)


def build_parser():
    parser = argparse.ArgumentParser(prog='maxsurf',
                                     description='Maximal graph experiments: solve, measure and check the '
                                                 'integral curvature estimate.')
    sub = parser.add_subparsers(dest='command', required=True)
    for name, text in (('run', 'full pipeline over the configured (r, R) pairs'),
                       ('sweep', 'pipeline over the sweep grid of (r, R) pairs'),
                       ('converge', 'errors and observed orders over grid.resolutions')):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument('--config', default=None, help='experiment YAML (default: maxsurf/config.yaml)')
        cmd.add_argument('--out', default=None, help='output directory (default: output.dir)')
        cmd.add_argument('--resolution', type=int, default=None, help='override grid.nx (and grid.ny)')
        cmd.add_argument('--quiet', action='store_true', help='console shows errors only')
        cmd.add_argument('--verbose', action='store_true', help='console shows debug output')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_STAGE_ERROR
    if args.resolution is not None:
        config['grid']['nx'] = args.resolution
        config['grid']['ny'] = None
    out_dir = args.out or config['output']['dir']
    setup_logging(out_dir, args.quiet, args.verbose)

    try:
        runner = ExperimentRunner(config, out_dir)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_STAGE_ERROR

    report = getattr(runner, args.command)()
    if not args.quiet:
        failed = [name for name, ok in report['checks'].items() if not ok]
        print(f"{args.command} {report['scenario']}: exit {report['exit_code']}"
              + (f", failed checks: {', '.join(failed)}" if failed else ''))
        if 'failed_stage' in report:
            print(f"stage '{report['failed_stage']['stage']}' failed: {report['failed_stage']['error']}")
    return report['exit_code']


if __name__ == "__main__":
    sys.exit(main())
