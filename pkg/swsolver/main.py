import argparse
import logging
import sys

from .config import CASES, DEFAULT_CFL, SCHEMES, STUDIES, RunConfig
from .runner import RunnerCLI
from .utils import SolverError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Well-balanced shallow water benchmark runner\n',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run --case a --scheme moving --cells 100 --amp 0.05 --out results/a_moving.csv
  %(prog)s run --config my_run.cfg --cells 1000
  %(prog)s sweep --study wellbalance
  %(prog)s sweep --study paper-figs --out-dir results
        """
    )
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    parser.add_argument('--no-progress', action='store_true', help='Hide progress bars')

    subparsers = parser.add_subparsers(
        dest='command',
        help='Available Commands',
        metavar='Command'
    )

    parser_run = subparsers.add_parser('run', help='Run one benchmark case')
    parser_run.add_argument('--config', help='key=value file; flags given here override it')
    parser_run.add_argument('--case', choices=CASES, help='Benchmark case (default a)')
    parser_run.add_argument('--scheme', choices=SCHEMES, help='Numerical scheme (default moving)')
    parser_run.add_argument('--cells', type=int, dest='n_cells', help='Number of cells (default 100)')
    parser_run.add_argument('--amp', type=float, dest='amplitude', help='Perturbation amplitude (default 0.05)')
    parser_run.add_argument('--t-end', type=float, dest='t_end', help="Final time (default: the case's own)")
    parser_run.add_argument('--cfl', type=float, help=f'CFL number (default {DEFAULT_CFL})')
    parser_run.add_argument('--out', help='CSV file for the per-cell deviations')
    parser_run.add_argument('--emit-reference', action='store_true', default=None,
                            help='Also write <out>.reference.csv with the background profile')

    parser_sweep = subparsers.add_parser('sweep', help='Run a predefined study')
    parser_sweep.add_argument('--study', required=True, choices=STUDIES, help='Study to run')
    parser_sweep.add_argument('--out-dir', default='results', help='Directory for CSV output')

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {'case': args.case, 'scheme': args.scheme, 'n_cells': args.n_cells,
                 'amplitude': args.amplitude, 't_end': args.t_end, 'cfl': args.cfl,
                 'out': args.out, 'emit_reference': args.emit_reference}
    return base.merged(overrides).validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)

    if not args.command:
        parser.print_help()
        return 0

    cli = RunnerCLI(progress=not args.no_progress)

    try:

        if args.command == 'run':
            cli.run(config_from_args(args))

        elif args.command == 'sweep':
            if args.study == 'wellbalance':
                cli.sweep_wellbalance()
            elif args.study == 'convergence':
                cli.sweep_convergence(out_dir=args.out_dir)
            elif args.study in ('paper-figs', 'figures'):
                cli.sweep_figures(args.out_dir)

    except SolverError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"❌ {e}")
        return 1

    finally:
        cli.close()

    return 0


if __name__ == '__main__':
    sys.exit(main())
