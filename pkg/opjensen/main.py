"""
opjensen - Main Entry Point
Command-line interface for operator Jensen-type inequality verification.
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from opjensen.core.coefficients import jensen_coefficient
from opjensen.core.converse import (
    PiecewiseC2Function,
    compute_constants,
    refine_subdivision,
)
from opjensen.core.errors import ConfigError, OpJensenError
from opjensen.core.inequalities import REPLAYABLE_NAMES, replay_residual
from opjensen.core.models import CampaignConfig, InequalityReport, SpectrumInterval
from opjensen.core.parsers import (
    parse_f,
    parse_floats,
    parse_h,
    parse_interval,
    parse_n_range,
    parse_policy,
)
from opjensen.processing.batch import BatchRunner
from opjensen.processing.campaigns import CounterexampleSearch, TrialRunner
from opjensen.processing.concurrent import ConcurrentRunner
from opjensen.reports.generator import (
    format_coefficient,
    generate_csv_table,
    generate_json_summary,
    generate_search_report,
    generate_summary_report,
    report_sink,
)


SEED_ENV = 'OPJENSEN_SEED'
REPLAY_TOL = 1e-12

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_CONFIG = 2
EXIT_INTERRUPTED = 130


# Configure logging
def setup_logging(verbose: bool = False, log_file: Optional[str] = None):
    """Configure application logging; stdout is reserved for results"""
    level = logging.DEBUG if verbose else logging.INFO

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True
    )


def resolve_seed(seed: int) -> int:
    """OPJENSEN_SEED, when set, overrides --seed"""
    value = os.environ.get(SEED_ENV)
    if value is None or not value.strip():
        return seed
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f'{SEED_ENV} must be an integer, got {value!r}') from None


def build_config(args, target: str) -> CampaignConfig:
    """Validate the campaign flags into a CampaignConfig"""
    n_min, n_max = parse_n_range(args.n)
    m, M = parse_interval(args.interval)
    try:
        return CampaignConfig(
            target=target,
            f=args.f,
            h=args.h,
            n_min=n_min,
            n_max=n_max,
            m=m,
            M=M,
            trials=args.trials,
            seed=resolve_seed(args.seed),
            policy=args.policy,
            override_positivity=args.override,
            lam=getattr(args, 'lam', None),
            p=getattr(args, 'p', None),
            q=getattr(args, 'q', None),
            operators=getattr(args, 'operators', 2),
            knots=parse_floats(args.knots) if getattr(args, 'knots', None) else None,
            refine=getattr(args, 'refine', False),
            skip_convexity_check=getattr(args, 'skip_convexity_check', False),
            boundary_instance=getattr(args, 'boundary_instance', False)
        )
    except ValidationError as e:
        raise ConfigError(f'Invalid campaign configuration: {e}') from e


def _runner(args):
    if args.workers and args.workers > 1:
        return ConcurrentRunner(max_workers=args.workers)
    return BatchRunner()


def run_campaign(args, target: str) -> int:
    """Run a verification campaign and report; exit 1 on violations or errors"""
    config = build_config(args, target)

    logging.info(f"Target: {config.target}")
    logging.info(f"f={config.f}, h={config.h}, policy={config.policy}, interval=[{config.m}, {config.M}]")
    logging.info(f"Trials: {config.trials} from seed {config.seed}")
    logging.info(f"Mode: {'concurrent' if args.workers and args.workers > 1 else 'sequential'}")

    trials = TrialRunner(config)
    with report_sink(args.out) as sink:
        summary = _runner(args).run(trials, config, callback=sink)

    print(generate_summary_report(summary), file=sys.stderr)
    if args.summary_json:
        Path(args.summary_json).write_text(generate_json_summary(summary) + "\n", encoding='utf-8')

    return EXIT_OK if summary.clean else EXIT_VIOLATIONS


def replay_file(path: str) -> int:
    """Replay every report in a JSON-lines file"""
    worst = 0.0
    failures = 0
    with open(Path(path), encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get('rhs') is None:
                # Vacuous report with an infinite right-hand side
                continue
            report = InequalityReport.model_validate(record)
            if report.name not in REPLAYABLE_NAMES:
                logging.info(f"Line {line_number}: {report.name} reports are not replayed")
                continue
            residual = replay_residual(report)
            worst = max(worst, residual)
            if residual > REPLAY_TOL:
                failures += 1
                logging.error(f"Line {line_number}: {report.name} replays with residual {residual:.3e}")

    print(f"replayed with worst residual {worst:.3e}; {failures} mismatch(es)")
    return EXIT_OK if failures == 0 else EXIT_VIOLATIONS


def cmd_coeff(args) -> int:
    """Handle the coeff command"""
    h = parse_h(args.h)
    policy = parse_policy(args.policy)
    print(format_coefficient(jensen_coefficient(h, policy)))
    return EXIT_OK


def cmd_table(args) -> int:
    """Handle the table command"""
    sys.stdout.write(generate_csv_table(args.s))
    return EXIT_OK


def cmd_verify(args) -> int:
    """Handle the verify command"""
    if args.replay:
        return replay_file(args.replay)
    if not args.target:
        raise ConfigError('verify needs --target or --replay')
    return run_campaign(args, args.target)


def cmd_hh(args) -> int:
    """Handle the hh command"""
    return run_campaign(args, 'hh')


def cmd_multi(args) -> int:
    """Handle the multi command"""
    if args.converse:
        target = 'cor7'
    elif args.weighted:
        target = 'cor6'
    else:
        target = 'thm6'
    return run_campaign(args, target)


def cmd_converse(args) -> int:
    """Handle the converse command"""
    f = parse_f(args.f)
    h = parse_h(args.h)
    policy = parse_policy(args.policy)
    m, M = parse_interval(args.interval)
    try:
        interval = SpectrumInterval(m=m, M=M, positivity_override=args.override)
    except ValidationError as e:
        raise ConfigError(f'Invalid interval: {e}') from e

    if args.knots:
        pf = PiecewiseC2Function.with_knots(f, interval, parse_floats(args.knots))
    elif args.refine:
        pf = refine_subdivision(f, interval)
    else:
        pf = PiecewiseC2Function.trivial(f, interval)

    constants = compute_constants(pf, h, policy)
    print(json.dumps(constants.to_dict(), indent=2))

    if not args.check:
        return EXIT_OK
    return run_campaign(args, 'thm5')


def cmd_search(args) -> int:
    """Handle the search command"""
    config = build_config(args, 'lambda')
    search = CounterexampleSearch(config)

    logging.info(f"Searching f={config.f}, h={config.h}: {config.trials} trials from seed {config.seed}")

    with report_sink(args.out) as sink:
        result = _runner(args).run(search, config, callback=sink)

    print(generate_search_report(result), file=sys.stderr)
    if args.summary_json:
        Path(args.summary_json).write_text(generate_json_summary(result) + "\n", encoding='utf-8')

    if not result.consistent:
        return EXIT_VIOLATIONS
    return EXIT_OK if result.violations == 0 and result.above_half.errors == 0 else EXIT_VIOLATIONS


def _add_common(parser):
    parser.add_argument('--verbose', '-v', action='store_true', help='Verbose logging')
    parser.add_argument('--log-file', help='Also write the log to this file')


def _add_campaign(parser, f_default: str = 'square', h_default: str = 'identity'):
    parser.add_argument('--f', default=f_default, help=f'f specifier or "registry" (default: {f_default})')
    parser.add_argument('--h', default=h_default, help=f'h specifier (default: {h_default})')
    parser.add_argument('--n', default='1-8', help='Dimension or range, e.g. 4 or 1-8 (default: 1-8)')
    parser.add_argument('--interval', default='1,2', help='Working interval m,M (default: 1,2)')
    parser.add_argument('--trials', type=int, default=100, help='Number of trials (default: 100)')
    parser.add_argument('--seed', type=int, default=0, help=f'First seed; {SEED_ENV} overrides it')
    parser.add_argument('--policy', default='safe', help='paper, safe or lambda:x (default: safe)')
    parser.add_argument('--override', action='store_true', help='Allow non-positive spectra')
    parser.add_argument('--boundary-instance', action='store_true',
                        help='Use diag(1, 0) with x = (1, 1)/sqrt(2) in every trial')
    parser.add_argument('--workers', '-w', type=int, default=None, help='Number of worker threads')
    parser.add_argument('--out', '-o', help='Write JSON-lines reports to this file (default: stdout)')
    parser.add_argument('--summary-json', help='Also write the campaign summary as JSON to this file')
    _add_common(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='opjensen - Verify Jensen-type inequalities for h-convex functions of operators'
    )

    subparsers = parser.add_subparsers(dest='command', help='Command to execute')

    # coeff
    coeff_parser = subparsers.add_parser('coeff', help='Print the Jensen coefficient of h')
    coeff_parser.add_argument('--h', required=True, help='h specifier, e.g. power:0.5')
    coeff_parser.add_argument('--policy', default='safe', help='paper, safe or lambda:x')
    _add_common(coeff_parser)

    # table
    table_parser = subparsers.add_parser('table', help='CSV table of the Safe coefficients')
    table_parser.add_argument('--s', type=float, default=0.5, help='Exponent s in (0, 1] (default: 0.5)')
    _add_common(table_parser)

    # verify
    verify_parser = subparsers.add_parser('verify', help='Run a verification campaign')
    verify_parser.add_argument('--target', help='Inequality to verify')
    verify_parser.add_argument('--replay', help='Replay the reports in a JSON-lines file')
    verify_parser.add_argument('--lambda', dest='lam', type=float, help='lambda for the lambda target')
    verify_parser.add_argument('--p', type=float, help='Weight of m (hh target)')
    verify_parser.add_argument('--q', type=float, help='Weight of M (hh target)')
    verify_parser.add_argument('--operators', '-k', type=int, default=2, help='Operators per family')
    verify_parser.add_argument('--knots', help='Interior subdivision knots for converse targets')
    verify_parser.add_argument('--refine', action='store_true', help='Subdivide at inflection points')
    verify_parser.add_argument('--skip-convexity-check', action='store_true',
                               help='Do not verify that f is h-convex')
    _add_campaign(verify_parser)

    # converse
    converse_parser = subparsers.add_parser('converse', help='Compute the converse constants')
    converse_parser.add_argument('--knots', help='Interior subdivision knots, e.g. 1.5')
    converse_parser.add_argument('--refine', action='store_true', help='Subdivide at inflection points')
    converse_parser.add_argument('--check', action='store_true', help='Also run converse trials')
    _add_campaign(converse_parser)

    # search
    search_parser = subparsers.add_parser('search', help='Search for violations of the pointwise form')
    search_parser.add_argument('--skip-convexity-check', action='store_true',
                               help='Do not verify that f is h-convex')
    _add_campaign(search_parser, f_default='sqrt', h_default='power:0.5')

    # hh
    hh_parser = subparsers.add_parser('hh', help='Hermite-Hadamard chain campaign')
    hh_parser.add_argument('--p', type=float, help='Weight of m (default: random per trial)')
    hh_parser.add_argument('--q', type=float, help='Weight of M (default: random per trial)')
    _add_campaign(hh_parser)

    # multi
    multi_parser = subparsers.add_parser('multi', help='Multi-operator campaign')
    multi_parser.add_argument('--operators', '-k', type=int, default=2, help='Operators per family')
    multi_parser.add_argument('--weighted', action='store_true', help='Weighted single-vector form')
    multi_parser.add_argument('--converse', action='store_true', help='Converse multi-operator form')
    multi_parser.add_argument('--knots', help='Interior subdivision knots for --converse')
    multi_parser.add_argument('--refine', action='store_true', help='Subdivide at inflection points')
    _add_campaign(multi_parser)

    return parser


COMMANDS = {
    'coeff': cmd_coeff,
    'table': cmd_table,
    'verify': cmd_verify,
    'converse': cmd_converse,
    'search': cmd_search,
    'hh': cmd_hh,
    'multi': cmd_multi,
}


def main(argv=None):
    """Main entry point"""
    parser = build_parser()

    # Parse arguments
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    # Setup logging
    setup_logging(args.verbose, args.log_file)

    # Execute command
    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        logging.info("Operation cancelled by user")
        return EXIT_INTERRUPTED
    except OpJensenError as e:
        logging.error(str(e))
        return EXIT_CONFIG
    except Exception as e:
        logging.exception(f"Unexpected error: {e}")
        return EXIT_VIOLATIONS


if __name__ == '__main__':
    sys.exit(main())
