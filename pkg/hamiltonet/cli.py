"""
Hamiltonet CLI - generate data, train models, forecast, evaluate and plot experiments
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml
from tabulate import tabulate

from hamiltonet.config import Config
from hamiltonet.error_utils import ConfigError, log_and_exit
from hamiltonet.experiment import SCHEMA, ExperimentConfig
from hamiltonet.forecast import EvaluationReport, SystemOracle, load_report
from hamiltonet.models import ModelKind
from hamiltonet.orchestration import (
    CHECKPOINT_FILE,
    ExperimentPipeline,
    compare_stage,
    dataset_dir,
    evaluate_stage,
    forecast_dir,
    generate_stage,
    load_surviving_models,
    train_dir,
    train_stage,
)
from hamiltonet.plotting import emit_plots
from hamiltonet.registry import ModelRegistry, load_checkpoint
from hamiltonet.systems import get_system, load_dataset

logger = logging.getLogger(__name__)

SUMMARY_METRICS = ('relative_std', 'max_relative_deviation', 'trajectory_mse', 'trajectory_mse_t5')


def _fmt(value: Any) -> Any:
    if isinstance(value, float):
        return f"{value:.4g}"
    return value


def apply_overrides(data: Dict[str, Any], assignments: Sequence[str]) -> Dict[str, Any]:
    """Apply `section.field=value` assignments (values parsed as YAML scalars or lists)"""
    for assignment in assignments or []:
        if '=' not in assignment:
            raise ConfigError(assignment, "override must look like section.field=value")
        key, raw = assignment.split('=', 1)
        value = yaml.safe_load(raw) if raw.strip() else None
        target = data
        parts = key.strip().split('.')
        for part in parts[:-1]:
            if target.get(part) is None:
                target[part] = {}
            target = target[part]
            if not isinstance(target, dict):
                raise ConfigError(key, f"'{part}' is not a section")
        target[parts[-1]] = value
    return data


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Experiment file (or defaults) plus command-line overrides"""
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    data = base.to_dict()
    overrides = list(getattr(args, 'set', None) or [])
    if getattr(args, 'output', None):
        overrides.append(f"output_dir={args.output}")
    return ExperimentConfig.from_dict(apply_overrides(data, overrides))


def _jobs(args: argparse.Namespace) -> int:
    return args.jobs if getattr(args, 'jobs', None) is not None else Config.n_jobs()


def print_summary(report: EvaluationReport, title: str):
    print(f"\n📈 {title}: {len(report.reports)} rollouts, {report.n_diverged} diverged")
    rows = [
        [metric, _fmt(report.summary[metric]['median']), _fmt(report.summary[metric]['iqr']),
         report.summary[metric]['count']]
        for metric in SUMMARY_METRICS
    ]
    print(tabulate(rows, headers=['Metric', 'Median', 'IQR', 'Count'], tablefmt='grid'))


def print_ranking(rows: List[Dict[str, Any]]):
    print("\n🏁 Model ranking by energy drift")
    headers = list(rows[0].keys()) if rows else []
    print(tabulate([[_fmt(v) for v in row.values()] for row in rows], headers=headers, tablefmt='grid'))


def cmd_generate(args: argparse.Namespace) -> int:
    config = load_config(args)
    directory = dataset_dir(config.output_path)
    dataset, report = generate_stage(config, directory, _jobs(args))
    config.save(config.output_path)

    print(f"\n✅ Dataset written to {directory}")
    rows = [
        ['System', config.system.kind.value],
        ['Trajectories', dataset.n_traj],
        ['Samples', len(dataset)],
        ['dt', dataset.dt],
        ['Noise sigma', dataset.sigma],
        ['Max relative energy drift', _fmt(report['max_relative_drift'])],
        ['Conservation check', 'passed' if report['passed'] else 'FAILED'],
    ]
    print(tabulate(rows, tablefmt='grid'))
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args)
    source = Path(args.dataset) if args.dataset else dataset_dir(config.output_path)
    dataset = load_dataset(source)
    if dataset.d != config.system.d:
        raise ConfigError('dataset', f"dataset dimension {dataset.d} does not match system dimension {config.system.d}")

    kinds = [ModelKind(args.model)] if args.model else config.models
    registry = ModelRegistry(config.output_path / "registry")
    config.save(config.output_path)
    for kind in kinds:
        result = train_stage(config, kind, dataset, train_dir(config.output_path, kind), registry, _jobs(args))
        print(f"\n✅ {kind.value}: best final loss {result.best.final_loss:.6e}")
        table = result.run_table()
        print(tabulate(
            [[r['restart'], r['seed'], _fmt(r['learning_rate']), r['status'], _fmt(r['final_loss']),
              '✓' if r['survivor'] else '✗'] for r in table],
            headers=['Restart', 'Seed', 'LR', 'Status', 'Final loss', 'Survivor'],
            tablefmt='grid',
        ))
    return 0


def _forecast_models(args: argparse.Namespace, config: ExperimentConfig, kind: ModelKind, survivors: bool):
    if args.oracle:
        return 'oracle', [SystemOracle(get_system(config.system))]
    if args.checkpoint:
        path = Path(args.checkpoint)
        if path.is_dir():
            models = load_surviving_models(path) if survivors else [load_checkpoint(path / CHECKPOINT_FILE)]
        else:
            models = [load_checkpoint(path)]
        return models[0].kind.value, models
    directory = train_dir(config.output_path, kind)
    models = load_surviving_models(directory) if survivors else [load_checkpoint(directory / CHECKPOINT_FILE)]
    return kind.value, models


def cmd_forecast(args: argparse.Namespace, survivors: bool = False) -> int:
    config = load_config(args)
    kinds = [ModelKind(args.model)] if args.model else config.models[:1]
    if args.compare:
        kinds = config.models

    evaluations: Dict[str, EvaluationReport] = {}
    for kind in kinds:
        label, models = _forecast_models(args, config, kind, survivors)
        directory = forecast_dir(config.output_path, label)
        report = evaluate_stage(config, models, directory, _jobs(args))
        evaluations[label] = report
        print_summary(report, f"{label} forecast ({directory})")
        if args.oracle or args.checkpoint:
            break

    if args.compare and len(evaluations) > 1:
        print_ranking(compare_stage(evaluations, config.output_path))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    return cmd_forecast(args, survivors=True)


def cmd_plot(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    directory = Path(args.report)
    directory = directory if directory.is_dir() else directory.parent
    labels = tuple(args.labels.split(',')) if args.labels else None
    paths = emit_plots(report, directory, labels)
    for name, path in paths.items():
        print(f"✓ {name}: {path}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args)
    pipeline = ExperimentPipeline(config, oracle=args.oracle, n_jobs=_jobs(args))
    context = pipeline.run()
    summary = context.get_summary()

    print("\n" + "=" * 60)
    print(f"EXPERIMENT SUMMARY: {config.name}")
    print("=" * 60)
    print(tabulate(
        [[name, meta['status'], f"{meta['execution_time']:.3f}s", meta.get('error', '')]
         for name, meta in summary['stages'].items()],
        headers=['Stage', 'Status', 'Time', 'Error'],
        tablefmt='grid',
    ))
    if 'compare' in context.results:
        print_ranking(context.results['compare'])
    print(f"⏱  Total Time: {summary['total_execution_time']:.3f}s")

    error = context.first_error
    if error is not None:
        stage = next(name for name, exc in context.errors.items() if exc is error)
        return log_and_exit(f"stage {stage}", error)
    return 0


def cmd_models(args: argparse.Namespace) -> int:
    config = load_config(args)
    models = ModelRegistry(config.output_path / "registry").list_models()
    if not models:
        print("\n📭 No registered models")
        return 0
    print(tabulate(
        [[m['model_name'], m['latest_version'], m['model_kind'], m['total_versions'],
          _fmt(m['metrics'].get('final_loss', float('nan')))] for m in models],
        headers=['Model', 'Version', 'Kind', 'Versions', 'Final loss'],
        tablefmt='grid',
    ))
    return 0


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='Experiment YAML file')
    parser.add_argument('--output', help='Output directory (default: $HAMILTONET_OUTPUT_ROOT/<name>)')
    parser.add_argument('--set', action='append', metavar='SECTION.FIELD=VALUE',
                        help='Override a config field, e.g. --set training.steps=500')
    parser.add_argument('--jobs', type=int, help='Parallel workers (default: $HAMILTONET_N_JOBS)')


def _add_forecast_args(parser: argparse.ArgumentParser):
    parser.add_argument('--model', choices=[k.value for k in ModelKind], help='Model kind to forecast')
    parser.add_argument('--checkpoint', help='Checkpoint file or training directory')
    parser.add_argument('--oracle', action='store_true', help='Use the true vector field instead of a checkpoint')
    parser.add_argument('--compare', action='store_true', help='Forecast every configured model kind and rank them')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='hamiltonet',
        description='Hamiltonet CLI - Hamiltonian neural networks for learned dynamics',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s generate --config experiments/lotka_volterra.yml
  %(prog)s train --config experiments/lotka_volterra.yml --model ghnn
  %(prog)s evaluate --config experiments/lotka_volterra.yml --compare
  %(prog)s forecast --config experiments/lotka_volterra.yml --oracle
  %(prog)s plot --report runs/lotka_volterra/forecast/ghnn
  %(prog)s run --config experiments/lotka_volterra.yml
  %(prog)s --print-schema
        """,
    )
    parser.add_argument('--print-schema', action='store_true', help='Print the experiment config schema')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    generate = subparsers.add_parser('generate', help='Generate a trajectory dataset')
    _add_common(generate)

    train = subparsers.add_parser('train', help='Train models with restarts')
    _add_common(train)
    train.add_argument('--dataset', help='Dataset directory (default: <output>/dataset)')
    train.add_argument('--model', choices=[k.value for k in ModelKind], help='Train only this model kind')

    forecast = subparsers.add_parser('forecast', help='Forecast from the best checkpoint')
    _add_common(forecast)
    _add_forecast_args(forecast)

    evaluate = subparsers.add_parser('evaluate', help='Forecast every surviving restart and aggregate')
    _add_common(evaluate)
    _add_forecast_args(evaluate)

    plot = subparsers.add_parser('plot', help='Render plots from a saved forecast report')
    plot.add_argument('--report', required=True, help='Report directory or report.json')
    plot.add_argument('--labels', help='Comma-separated axis labels for the phase plot')

    run = subparsers.add_parser('run', help='Generate, train, evaluate and compare in one go')
    _add_common(run)
    run.add_argument('--oracle', action='store_true', help='Also evaluate the true vector field')

    models = subparsers.add_parser('models', help='List registered models')
    _add_common(models)
    return parser


COMMANDS = {
    'generate': cmd_generate,
    'train': cmd_train,
    'forecast': cmd_forecast,
    'evaluate': cmd_evaluate,
    'plot': cmd_plot,
    'run': cmd_run,
    'models': cmd_models,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.print_schema:
        print(SCHEMA)
        return 0
    if not args.command:
        parser.print_help()
        return 1

    try:
        Config.validate()
        Config.configure_logging(args.verbose)
        np.seterr(over='ignore', invalid='ignore')
        return COMMANDS[args.command](args)
    except Exception as exc:
        return log_and_exit(args.command, exc)


if __name__ == '__main__':
    sys.exit(main())
