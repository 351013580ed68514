"""Command-line interface for the figurative-language RLVR toolkit."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Iterable

from .config import Config, RunConfig, load_toy_profile, setup_logging
from .dataset_io import (
    ADAPTERS,
    SPLIT_POLICIES,
    build_corpus,
    fixed_budget_sample,
    group_by_style,
    ingest,
    read_corpus,
    read_samples,
    read_traces,
    split,
    validate_corpus,
    write_corpus,
    write_samples,
    write_train_report,
)
from .errors import (
    ConfigValidationError,
    CorpusReadError,
    RejectedInputError,
    SchemaError,
    StageError,
    TraceParseError,
    VersionMismatchError,
)
from .evaluation import (
    Metrics,
    REPORT_FORMATS,
    disagreement_report,
    emit_report,
    evaluate,
    transfer_gain_matrix,
)
from .grpo import TOY_MODES, TrainReport, run_toy_training
from .pipeline import Pipeline, validate
from .rewards import score_batch
from .styles import compose_prompt, get_style, list_styles, render_prompt
from .synthetic import make_synthetic_samples, mock_teacher_script
from .toy import make_toy_task, split_toy_task

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_STAGE = 3

# input problems the user can fix; reported with EXIT_INVALID
INPUT_ERRORS = (
    ConfigValidationError,
    RejectedInputError,
    SchemaError,
    CorpusReadError,
    VersionMismatchError,
    TraceParseError,
)


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise CorpusReadError(line_no, f"invalid JSON: {e.msg}") from None
    return rows


def _write_lines(rows: Iterable[dict], out: Path | None):
    text = "".join(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n" for row in rows)
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding='utf-8')


def _write_json(data: Any, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding='utf-8')


def _sink(out: Path | None):
    return out if out is not None else sys.stdout


def _banner(title: str, items: dict[str, Any]):
    print("=" * 60)
    print(title)
    print("=" * 60)
    width = max((len(k) for k in items), default=0) + 1
    for key, value in items.items():
        print(f"{key + ':':<{width}} {value}")
    print("=" * 60)


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    overrides: dict[str, Any] = {}
    if getattr(args, 'output_dir', None):
        overrides.setdefault('paths', {})['output_dir'] = str(Path(args.output_dir).resolve())
    if getattr(args, 'stages', None):
        overrides.setdefault('run', {})['stages'] = [s.strip() for s in args.stages.split(',') if s.strip()]
    if getattr(args, 'seed', None) is not None:
        overrides.setdefault('run', {})['seed'] = args.seed
    if args.log_level:
        overrides.setdefault('settings', {}).setdefault('logging', {})['level'] = args.log_level
    config = Config(args.config, setup=args.setup, overrides=overrides)
    return RunConfig.from_config(config)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    """Validate the run config and execute its stages.

    Args:
        args: Parsed ``run`` arguments (config, setup and overrides).

    Returns:
        EXIT_OK; validation and stage failures raise.
    """
    run_config = _load_run_config(args)
    violations = validate(run_config)
    if violations:
        raise ConfigValidationError(violations)

    _banner("Figurative RLVR Run", {
        "Configuration": args.config,
        "Setup": args.setup or "-",
        "Stages": ", ".join(run_config.stages),
        "Styles": ", ".join(s.value for s in run_config.styles),
        "Groups": ", ".join(run_config.groups),
        "Output": run_config.output_dir,
    })
    manifest = Pipeline(run_config).run()

    print()
    for name, record in manifest.stages.items():
        status = "cached" if record.cache_hit else f"{record.wall_clock_s:.3f}s"
        print(f"  {name:<13} {status}")
    print("\n" + "=" * 60)
    print("Done!")
    print("=" * 60)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    """Check a run config without running it.

    Args:
        args: Parsed ``validate`` arguments (config, setup and overrides).

    Returns:
        EXIT_OK when the config has no violations.
    """
    run_config = _load_run_config(args)
    violations = validate(run_config)
    if violations:
        raise ConfigValidationError(violations)
    print(f"{args.config}: ok")
    return EXIT_OK


def cmd_prompts(args: argparse.Namespace) -> int:
    """List styles or print one prompt template.

    Args:
        args: ``action`` (show or list), ``--style``, ``--kind`` and optional ``--caption``.

    Returns:
        EXIT_OK
    """
    if args.action == 'list':
        for style in list_styles():
            print(f"{style.id.value:<10} {style.positive_label} / {style.negative_label}")
        return EXIT_OK
    if args.caption is not None:
        print(compose_prompt(args.style, args.kind, args.caption))
    else:
        print(render_prompt(args.style, args.kind))
    return EXIT_OK


def cmd_filter(args: argparse.Namespace) -> int:
    """Filter a traces file into kept and rejected corpora.

    Args:
        args: ``--in`` traces, optional ``--samples`` supplying gold labels,
            ``--out`` for kept records, ``--rejects`` and ``--stats``.

    Returns:
        EXIT_OK; the statistics are also printed as JSON.
    """
    samples = {s.id: s for s in read_samples(args.samples)} if args.samples else None
    build = build_corpus(read_traces(args.input), samples, max_workers=args.workers)
    write_corpus(build.kept, args.out)
    if args.rejects:
        write_corpus(build.rejected, args.rejects)
    stats = build.stats()
    if args.stats:
        _write_json(stats, args.stats)
    print(json.dumps(stats, sort_keys=True))
    return EXIT_OK


def _score_rows(args: argparse.Namespace) -> list[dict]:
    if args.input is not None:
        rows = _read_jsonl(args.input)
        try:
            items = [(row['output'], row['gold'], row.get('style', args.style)) for row in rows]
        except KeyError as e:
            raise RejectedInputError(f"score input rows need 'output' and 'gold': missing {e}") from None
        results = score_batch(items, strict_acc=args.strict_acc, max_workers=args.workers)
        return [r.to_dict() for r in results]

    if args.gold is None:
        raise RejectedInputError("score --outputs needs --gold")
    gold = {s.id: s for s in read_samples(args.gold)}
    rows = _read_jsonl(args.outputs)
    matched, unmatched = [], []
    for position, row in enumerate(rows):
        if 'sample_id' not in row or 'output' not in row:
            raise RejectedInputError(f"output row {position + 1} needs 'sample_id' and 'output'")
        (matched if row['sample_id'] in gold else unmatched).append(position)
    if unmatched:
        logger.warning(f"{len(unmatched)} output(s) have no gold sample")

    items = [
        (rows[i]['output'], gold[rows[i]['sample_id']].gold_label, gold[rows[i]['sample_id']].style)
        for i in matched
    ]
    results = score_batch(items, strict_acc=args.strict_acc, max_workers=args.workers)
    report: list[dict] = [{} for _ in rows]
    for i, result in zip(matched, results):
        sample = gold[rows[i]['sample_id']]
        report[i] = {"sample_id": sample.id, "style": sample.style.value, **result.to_dict()}
    for i in unmatched:
        report[i] = {"sample_id": rows[i]['sample_id'], "error": "no gold sample"}
    return report


def cmd_score(args: argparse.Namespace) -> int:
    """Score model outputs with the verifiable reward.

    Args:
        args: Either ``--outputs`` (sample_id, output rows) joined to ``--gold``
            samples by id, or a self-contained ``--input`` (output, gold, style).

    Returns:
        EXIT_OK; one RewardBreakdown per input row goes to ``--report`` or stdout.
    """
    _write_lines(_score_rows(args), args.report)
    return EXIT_OK


def cmd_toy_train(args: argparse.Namespace) -> int:
    """Train the toy policy under one setup and summarize it.

    Args:
        args: ``--mode``, ``--seed``, ``--n``, ``--style``, optional ``--config``
            overrides, ``--report`` and ``--save-policy`` targets.

    Returns:
        EXIT_OK
    """
    task = make_toy_task(args.seed, args.n, args.style)
    train, test = split_toy_task(task)
    sft_config, grpo_config = load_toy_profile(args.config, args.seed)
    run = run_toy_training(args.mode, train, test, args.seed, sft_config, grpo_config)

    summary: dict[str, Any] = {"mode": run.mode, "seed": args.seed, "n": args.n, "accuracy": run.accuracy}
    if run.sft_losses:
        summary["sft_losses"] = run.sft_losses
    if run.report is not None:
        rewards = run.report.mean_rewards()
        window = max(1, len(rewards) // 10)
        summary["reward_first"] = float(rewards[:window].mean())
        summary["reward_last"] = float(rewards[-window:].mean())
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.report:
        write_train_report(run.report or TrainReport(final_accuracy=run.accuracy), args.report)
    if args.save_policy:
        run.policy.save(args.save_policy)
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace) -> int:
    """Map a source dataset onto a samples file.

    Args:
        args: ``--input``, ``--adapter``, ``--style``, ``--split``, ``--threshold`` and ``--out``.

    Returns:
        EXIT_OK; unmappable rows are listed, not fatal.
    """
    report = ingest(args.input, args.adapter, args.style, split=args.split, threshold=args.threshold)
    write_samples(report.samples, args.out)
    print(f"{len(report.samples)} samples written to {args.out}; {len(report.unmappable)} unmappable rows")
    for row, cause in report.unmappable:
        print(f"  row {row}: {cause}")
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    """Split a samples file into train.jsonl and test.jsonl.

    Args:
        args: ``--samples``, ``--policy``, ``--seed``, ``--train-fraction`` and ``--out-dir``.

    Returns:
        EXIT_OK
    """
    train, test = split(read_samples(args.samples), args.policy, args.seed, args.train_fraction)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_samples(train, args.out_dir / 'train.jsonl')
    write_samples(test, args.out_dir / 'test.jsonl')
    print(f"train: {len(train)}  test: {len(test)}")
    return EXIT_OK


def cmd_sample_budget(args: argparse.Namespace) -> int:
    """Draw an equal per-style training budget.

    Args:
        args: ``--samples``, ``--total``, ``--seed`` and ``--out``.

    Returns:
        EXIT_OK; per-style counts are printed as JSON.
    """
    drawn = fixed_budget_sample(group_by_style(read_samples(args.samples)), args.total, args.seed)
    write_samples(drawn, args.out)
    counts = {style.value: len(items) for style, items in group_by_style(drawn).items()}
    print(json.dumps(counts, sort_keys=True))
    return EXIT_OK


def cmd_corpus(args: argparse.Namespace) -> int:
    """Write, read or validate a distilled corpus file.

    Args:
        args: ``action`` is ``write`` (``--traces`` with optional ``--samples``
            to ``--out``), ``read`` (records or ``--summary`` of ``path``) or
            ``validate`` (summary of ``path``).

    Returns:
        EXIT_OK
    """
    if args.action == 'write':
        samples = {s.id: s for s in read_samples(args.samples)} if args.samples else None
        build = build_corpus(read_traces(args.traces), samples)
        write_corpus(build.records, args.out)
        print(json.dumps(build.stats(), sort_keys=True))
    elif args.action == 'read' and not args.summary:
        _write_lines((r.to_dict() for r in read_corpus(args.path)), args.out)
    else:
        print(json.dumps(validate_corpus(args.path), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Report accuracy and F1 for predictions against gold labels.

    Args:
        args: ``--input`` rows with prediction and gold, ``--style``, ``--macro`` and report options.

    Returns:
        EXIT_OK
    """
    rows = _read_jsonl(args.input)
    style = get_style(args.style)
    metrics = evaluate(
        [row.get('prediction') for row in rows],
        [row['gold'] for row in rows],
        style.positive_label,
        negative=style.negative_label,
        macro=args.macro,
    )
    emit_report(metrics, _sink(args.out), args.format)
    return EXIT_OK


def cmd_transfer_matrix(args: argparse.Namespace) -> int:
    """Report cross-style gains over the per-style GRPO-only baselines.

    Args:
        args: ``--input`` JSON with results and baselines, ``--metric`` and report options.

    Returns:
        EXIT_OK; a missing cell raises.
    """
    with open(args.input, 'r', encoding='utf-8') as f:
        data = json.load(f)
    results = {}
    for key, value in data.get('results', {}).items():
        source, sep, target = key.partition('->')
        if not sep:
            raise RejectedInputError(f"result key '{key}' must look like 'source->target'")
        results[(source.strip(), target.strip())] = Metrics.from_dict(value)
    baselines = {k: Metrics.from_dict(v) for k, v in data.get('baselines', {}).items()}
    matrix = transfer_gain_matrix(results, baselines, args.metric)
    emit_report(matrix, _sink(args.out), args.format)
    return EXIT_OK


def cmd_disagree(args: argparse.Namespace) -> int:
    """Compare two prediction sets where they differ.

    Args:
        args: ``--input`` rows with a, b and gold, plus report options.

    Returns:
        EXIT_OK
    """
    rows = _read_jsonl(args.input)
    report = disagreement_report(
        [row['a'] for row in rows],
        [row['b'] for row in rows],
        [row['gold'] for row in rows],
    )
    emit_report(report, _sink(args.out), args.format)
    return EXIT_OK


def cmd_synthetic(args: argparse.Namespace) -> int:
    """Write a synthetic toy-feature dataset and optionally its teacher script.

    Args:
        args: ``--n`` per style, ``--seed``, ``--styles``, ``--out`` and ``--teacher-script``.

    Returns:
        EXIT_OK
    """
    styles = [s.strip() for s in args.styles.split(',') if s.strip()]
    samples = make_synthetic_samples(args.n, args.seed, styles)
    write_samples(samples, args.out)
    print(f"{len(samples)} synthetic samples written to {args.out}")
    if args.teacher_script:
        script = mock_teacher_script(samples, seed=args.seed)
        args.teacher_script.parent.mkdir(parents=True, exist_ok=True)
        with open(args.teacher_script, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(script, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write('\n')
        print(f"Teacher script with {len(script)} entries written to {args.teacher_script}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_config_args(parser: argparse.ArgumentParser):
    parser.add_argument('--config', default='configs/config.yaml',
                        help='Path to run config YAML/JSON (default: configs/config.yaml)')
    parser.add_argument('--setup', help='Setup overlay name from configs/setups/ (e.g. sft_then_grpo)')
    parser.add_argument('--output-dir', help='Run directory (overrides paths.output_dir)')
    parser.add_argument('--stages', help='Comma-separated stage list (overrides run.stages)')
    parser.add_argument('--seed', type=int, help='Run seed (overrides run.seed)')


def _add_report_args(parser: argparse.ArgumentParser):
    parser.add_argument('--format', choices=REPORT_FORMATS, default='markdown', help='Output format')
    parser.add_argument('--out', type=Path, help='Output file (default: stdout)')


def build_parser() -> argparse.ArgumentParser:
    """Build the ``figrlvr`` argument parser.

    Returns:
        Parser whose subcommands set ``func`` to their handler.
    """
    parser = argparse.ArgumentParser(
        prog='figrlvr',
        description='Distill, filter, train and evaluate figurative-language reasoning with verifiable rewards.'
    )
    parser.add_argument('--log-level', help='Logging level (overrides settings.logging.level)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', help='Run the configured pipeline stages')
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('validate', help='Check a run config without running it')
    _add_config_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser('prompts', help='Show prompt templates')
    p.add_argument('action', choices=['show', 'list'])
    p.add_argument('--style', default='sarcasm')
    p.add_argument('--kind', default='rlvr', help='teacher or rlvr')
    p.add_argument('--caption', help='Append a caption as sent to a model')
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser('filter', help='Filter teacher traces into a distilled corpus')
    p.add_argument('--in', dest='input', type=Path, required=True, help='Traces JSONL')
    p.add_argument('--samples', type=Path, help='Gold samples; default: gold labels carried by the traces')
    p.add_argument('--out', type=Path, required=True, help='Kept records')
    p.add_argument('--rejects', type=Path, help='Rejected records with their reject reason')
    p.add_argument('--stats', type=Path, help='Kept, rejected and per-reason counts as JSON')
    p.add_argument('--workers', type=int)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser('score', help='Score model outputs with the verifiable reward')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--outputs', type=Path, help='JSONL rows with sample_id and output')
    source.add_argument('--input', type=Path, help='JSONL rows with output, gold and style')
    p.add_argument('--gold', type=Path, help='Samples file the outputs are joined to by id')
    p.add_argument('--style', default='sarcasm', help='Style for --input rows without one')
    p.add_argument('--strict-acc', action='store_true', help='Zero accuracy reward for malformed outputs')
    p.add_argument('--workers', type=int)
    p.add_argument('--report', '--out', dest='report', type=Path, help='Output file (default: stdout)')
    p.set_defaults(func=cmd_score)

    p = sub.add_parser('toy-train', help='Train the toy policy under one setup')
    p.add_argument('--mode', choices=TOY_MODES, default='sft-then-grpo')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--n', type=int, default=2000)
    p.add_argument('--style', default='sarcasm')
    p.add_argument('--config', type=Path, help='YAML/JSON with sft and grpo overrides of the toy profile')
    p.add_argument('--report', type=Path, help='Write the per-step training records as JSON Lines')
    p.add_argument('--save-policy', type=Path)
    p.set_defaults(func=cmd_toy_train)

    p = sub.add_parser('ingest', help='Map a source dataset onto samples')
    p.add_argument('--input', type=Path, required=True)
    p.add_argument('--adapter', choices=sorted(ADAPTERS), required=True)
    p.add_argument('--style')
    p.add_argument('--split', choices=['train', 'test'])
    p.add_argument('--threshold', type=int, default=1)
    p.add_argument('--out', type=Path, required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser('split', help='Split samples into train/test')
    p.add_argument('--samples', type=Path, required=True)
    p.add_argument('--policy', choices=SPLIT_POLICIES, default='seeded_80_20')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--train-fraction', type=float, default=0.8)
    p.add_argument('--out-dir', type=Path, required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser('sample-budget', help='Draw an equal per-style training budget')
    p.add_argument('--samples', type=Path, required=True)
    p.add_argument('--total', type=int, required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', type=Path, required=True)
    p.set_defaults(func=cmd_sample_budget)

    p = sub.add_parser('corpus', help='Write, read or validate a distilled corpus')
    actions = p.add_subparsers(dest='action', required=True)
    a = actions.add_parser('write', help='Filter traces into one corpus file with kept and rejected records')
    a.add_argument('--traces', type=Path, required=True)
    a.add_argument('--samples', type=Path, help='Gold samples; default: gold labels carried by the traces')
    a.add_argument('--out', type=Path, required=True)
    a.set_defaults(func=cmd_corpus)
    a = actions.add_parser('read', help='Print corpus records as JSON Lines')
    a.add_argument('path', type=Path)
    a.add_argument('--summary', action='store_true', help='Print the summary instead of the records')
    a.add_argument('--out', type=Path, help='Output file (default: stdout)')
    a.set_defaults(func=cmd_corpus)
    a = actions.add_parser('validate', help='Check a corpus and summarize it')
    a.add_argument('path', type=Path)
    a.set_defaults(func=cmd_corpus)

    p = sub.add_parser('eval', help='Accuracy and F1 for predictions')
    p.add_argument('--input', type=Path, required=True, help='JSONL rows with prediction and gold')
    p.add_argument('--style', default='sarcasm')
    p.add_argument('--macro', action='store_true', help='Macro F1 instead of positive-class F1')
    _add_report_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('transfer-matrix', help='Cross-style gains over GRPO-only')
    p.add_argument('--input', type=Path, required=True,
                   help="JSON with 'results' ('source->target': metrics) and 'baselines'")
    p.add_argument('--metric', choices=['accuracy', 'f1'], default='accuracy')
    _add_report_args(p)
    p.set_defaults(func=cmd_transfer_matrix)

    p = sub.add_parser('disagree', help='Compare two prediction sets where they differ')
    p.add_argument('--input', type=Path, required=True, help='JSONL rows with a, b and gold')
    _add_report_args(p)
    p.set_defaults(func=cmd_disagree)

    p = sub.add_parser('synthetic', help='Write a synthetic toy-feature dataset')
    p.add_argument('--n', type=int, default=200, help='Samples per style')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--styles', default='sarcasm')
    p.add_argument('--out', type=Path, required=True)
    p.add_argument('--teacher-script', type=Path, help='Also write the scripted teacher traces')
    p.set_defaults(func=cmd_synthetic)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the CLI.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Exit code: 0 success, 1 unexpected error, 2 invalid input, 3 stage failure
    """
    args = build_parser().parse_args(argv)
    if args.command not in ('run', 'validate'):
        setup_logging(args.log_level or 'WARNING')

    handler: Callable[[argparse.Namespace], int] = args.func
    try:
        return handler(args)
    except ConfigValidationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except StageError as e:
        logger.debug("Stage failure", exc_info=True)
        print(f"\nError: {e}", file=sys.stderr)
        if e.__cause__ is not None:
            print(f"Cause: {e.__cause__}", file=sys.stderr)
        return EXIT_STAGE
    except INPUT_ERRORS as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        logger.exception("Unexpected error")
        print(f"\nError: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
