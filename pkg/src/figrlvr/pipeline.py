"""End-to-end run orchestration.

Pipeline flow (stages run in this order, each optional):
    1. ingest        datasets or synthetic samples    -> samples.jsonl
    2. split         train/test split, budget sample  -> train.jsonl, test.jsonl
    3. distill       teacher CoT traces via gateway   -> traces.jsonl
    4. filter        parse + gold-label check         -> corpus.jsonl, filter_stats.json
    5. export_sft    SFT-CoT or SFT-Binary records    -> sft.jsonl
    6. sft           toy SFT warm-up per group        -> policy-sft-<group>.npy, sft-<group>.json
    7. grpo          toy GRPO per group               -> policy-grpo-<group>.npy, grpo-<group>.json
    8. eval          greedy accuracy/F1 on test       -> metrics.json, metrics.md, predictions.json
    9. analyze       trained vs base disagreement     -> analysis.json, analysis.md
   10. gateway_eval  student endpoint on test split   -> gateway_eval.json, gateway_eval.md

A stage is skipped when the previous manifest recorded the same input digests
and every recorded output still exists with its recorded digest.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import time
from functools import partial
from pathlib import Path
from typing import Callable

import httpx
import numpy as np

from .config import RunConfig
from .dataset_io import (
    ADAPTERS,
    SPLIT_POLICIES,
    Sample,
    SftRecord,
    TraceRecord,
    build_corpus,
    fixed_budget_sample,
    group_by_style,
    ingest,
    read_corpus,
    read_samples,
    read_sft_records,
    read_traces,
    split,
    write_corpus,
    write_samples,
    write_sft_records,
    write_traces,
)
from .errors import ConfigValidationError, FigRlvrError, StageError
from .evaluation import (
    DisagreementReport,
    Metrics,
    compare_setups,
    disagreement_report,
    emit_report,
    evaluate,
    render_report,
)
from .gateway import (
    DecodeParams,
    GatewayClient,
    GenerationRequest,
    ImagePayload,
    MockModel,
    mock_model,
)
from .grpo import sft_warmup, train_grpo
from .manifest import RunManifest, StageRecord, file_digest, json_digest
from .rewards import total_reward
from .styles import StyleId, TemplateKind, binary_completion, compose_prompt, cot_completion, get_style
from .synthetic import make_synthetic_samples, mock_student_script, mock_teacher_script
from .toy import NUM_FEATURES, ToyPolicy, ToyTask, action_for_completion, base_policy, greedy_labels
from .trace_parser import step_length_stats

logger = logging.getLogger(__name__)

STAGES = (
    "ingest",
    "split",
    "distill",
    "filter",
    "export_sft",
    "sft",
    "grpo",
    "eval",
    "analyze",
    "gateway_eval",
)

SAMPLES_FILE = "samples.jsonl"
TRAIN_FILE = "train.jsonl"
TEST_FILE = "test.jsonl"
TRACES_FILE = "traces.jsonl"
CORPUS_FILE = "corpus.jsonl"
FILTER_STATS_FILE = "filter_stats.json"
SFT_FILE = "sft.jsonl"


def _write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path


def _has_source(config: RunConfig, stage: str, substitute: Path | None) -> bool:
    return stage in config.stages or substitute is not None


def validate(config: RunConfig) -> list[str]:
    """Return every violation found in ``config``; an empty list means ok."""
    violations: list[str] = []
    stages = config.stages

    if not stages:
        violations.append("run.stages: no stages selected")
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        violations.append(f"run.stages: unknown stage(s) {unknown}. Valid stages: {', '.join(STAGES)}")
    if not config.styles:
        violations.append("run.styles: style selection is empty")

    # paths
    for i, dataset in enumerate(config.datasets):
        if not dataset.path.exists():
            violations.append(f"datasets[{i}].path: {dataset.path} does not exist")
        if dataset.adapter not in ADAPTERS:
            violations.append(f"datasets[{i}].adapter: unknown adapter '{dataset.adapter}'")
    for name in ("samples", "traces", "corpus", "policy"):
        path = getattr(config.inputs, name)
        if path is not None and not path.exists():
            violations.append(f"inputs.{name}: {path} does not exist")
    if config.gateway.images_dir is not None and not config.gateway.images_dir.is_dir():
        violations.append(f"paths.images_dir: {config.gateway.images_dir} is not a directory")

    # style/label consistency
    selected = set(config.styles)
    for i, dataset in enumerate(config.datasets):
        if dataset.style is not None and dataset.style not in selected:
            violations.append(f"datasets[{i}].style: '{dataset.style.value}' is not in run.styles")
    if config.synthetic is not None:
        extra = [s.value for s in config.synthetic.styles if s not in selected]
        if extra:
            violations.append(f"synthetic.styles: {extra} not in run.styles")

    if config.split_policy not in SPLIT_POLICIES:
        violations.append(f"split.policy: unknown policy '{config.split_policy}'")

    # budget divisibility
    total = config.budget.total
    if total is not None and config.styles:
        if not isinstance(total, int) or total <= 0:
            violations.append(f"budget.total: must be a positive integer, got {total!r}")
        elif total % len(config.styles) != 0:
            violations.append(f"budget.total: total {total} not divisible by style count {len(config.styles)}")

    # dependency closure
    if "ingest" in stages and not config.datasets and config.synthetic is None:
        violations.append("stage 'ingest' needs 'datasets' or 'synthetic'")
    if "split" in stages and not _has_source(config, "ingest", config.inputs.samples):
        violations.append("stage 'split' needs samples: add stage 'ingest' or set inputs.samples")
    needs_split = [s for s in ("distill", "export_sft", "sft", "grpo", "eval", "analyze", "gateway_eval") if s in stages]
    if needs_split and "split" not in stages:
        violations.append(f"stage(s) {needs_split} need stage 'split' for the train/test files")
    if "filter" in stages and not _has_source(config, "distill", config.inputs.traces):
        violations.append("stage 'filter' needs teacher traces: add stage 'distill' or set inputs.traces")
    if "export_sft" in stages and config.sft_target == "cot" and not _has_source(config, "filter", config.inputs.corpus):
        violations.append("stage 'export_sft' (cot) needs a distilled corpus: add stage 'filter' or set inputs.corpus")
    if "sft" in stages and "export_sft" not in stages:
        violations.append("stage 'sft' needs an SFT corpus: add stage 'export_sft' (and a corpus for cot targets)")
    if "grpo" in stages and config.grpo_init == "sft" and not _has_source(config, "sft", config.inputs.policy):
        violations.append("stage 'grpo' with grpo.init 'sft' needs an SFT policy: add stage 'sft' or set inputs.policy")
    if "analyze" in stages and "eval" not in stages:
        violations.append("stage 'analyze' needs stage 'eval'")

    return violations


StageFn = Callable[[], dict[str, Path]]


class Pipeline:
    """Runs the configured stages in order and records a RunManifest.

    Args:
        config: Validated run configuration.
        transport: Optional httpx transport for real endpoints (tests).
    """

    def __init__(self, config: RunConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self.run_dir = config.output_dir
        self.transport = transport
        self._mock: MockModel | None = None
        self._stage_fns: dict[str, StageFn] = {
            "ingest": self._ingest,
            "split": self._split,
            "distill": self._distill,
            "filter": self._filter,
            "export_sft": self._export_sft,
            "sft": self._sft,
            "grpo": self._grpo,
            "eval": self._eval,
            "analyze": self._analyze,
            "gateway_eval": self._gateway_eval,
        }

    # -- paths ---------------------------------------------------------------

    def path(self, name: str) -> Path:
        return self.run_dir / name

    def _samples_path(self) -> Path:
        if "ingest" in self.config.stages or self.config.inputs.samples is None:
            return self.path(SAMPLES_FILE)
        return self.config.inputs.samples

    def _traces_path(self) -> Path:
        if "distill" in self.config.stages or self.config.inputs.traces is None:
            return self.path(TRACES_FILE)
        return self.config.inputs.traces

    def _corpus_path(self) -> Path:
        if "filter" in self.config.stages or self.config.inputs.corpus is None:
            return self.path(CORPUS_FILE)
        return self.config.inputs.corpus

    def _final_policy_path(self, group: str) -> Path | None:
        """Policy evaluated for a group: GRPO output, else SFT output, else the base policy."""
        if "grpo" in self.config.stages:
            return self.path(f"policy-grpo-{group}.npy")
        if "sft" in self.config.stages:
            return self.path(f"policy-sft-{group}.npy")
        return None

    def _stage_inputs(self, stage: str) -> dict[str, Path]:
        """Files a stage reads; their digests decide whether it can be skipped."""
        groups = self.config.groups
        inputs: dict[str, dict[str, Path]] = {
            "ingest": {f"dataset_{i}": d.path for i, d in enumerate(self.config.datasets)},
            "split": {"samples": self._samples_path()},
            "distill": {"train": self.path(TRAIN_FILE)},
            "filter": {"traces": self._traces_path(), "train": self.path(TRAIN_FILE)},
            "export_sft": {"train": self.path(TRAIN_FILE)},
            "sft": {"sft": self.path(SFT_FILE), "train": self.path(TRAIN_FILE)},
            "grpo": {"train": self.path(TRAIN_FILE)},
            "eval": {"test": self.path(TEST_FILE)},
            "analyze": {"test": self.path(TEST_FILE)},
            "gateway_eval": {"test": self.path(TEST_FILE)},
        }
        files = dict(inputs[stage])
        if stage == "export_sft" and self.config.sft_target == "cot":
            files["corpus"] = self._corpus_path()
        if stage == "grpo" and self.config.grpo_init == "sft":
            for group in groups:
                files[f"init_{group}"] = self._grpo_init_path(group)
        if stage in ("eval", "analyze"):
            for group in groups:
                policy_path = self._final_policy_path(group)
                if policy_path is not None:
                    files[f"policy_{group}"] = policy_path
        return files

    # -- orchestration -------------------------------------------------------

    def _config_digest(self) -> str:
        snapshot = self.config.snapshot()
        for volatile in ("stages", "output_dir", "log_level"):
            snapshot.pop(volatile, None)
        return json_digest(snapshot)

    def run(self) -> RunManifest:
        """Execute the configured stages in pipeline order and save the manifest."""
        self.run_dir.mkdir(parents=True, exist_ok=True)
        previous = RunManifest.load(self.run_dir)
        manifest = RunManifest(config=self.config.snapshot())
        config_digest = self._config_digest()

        for stage in STAGES:
            if stage not in self.config.stages:
                continue
            inputs = {"config": config_digest}
            for name, path in self._stage_inputs(stage).items():
                if not path.exists():
                    raise StageError(stage, f"missing input '{name}': {path}")
                inputs[name] = file_digest(path)

            cached = previous.stages.get(stage) if previous else None
            if cached is not None and cached.inputs == inputs and self._outputs_intact(cached):
                logger.info(f"Stage '{stage}': inputs unchanged, outputs intact; skipping")
                manifest.stages[stage] = StageRecord(
                    inputs=inputs, outputs=dict(cached.outputs), cache_hit=True, wall_clock_s=0.0
                )
                continue

            logger.info(f"Stage '{stage}': running")
            started = time.perf_counter()
            try:
                outputs = self._stage_fns[stage]()
            except StageError:
                raise
            except (FigRlvrError, OSError, ValueError, KeyError) as e:
                raise StageError(stage, str(e)) from e
            elapsed = round(time.perf_counter() - started, 3)

            manifest.stages[stage] = StageRecord(
                inputs=inputs,
                outputs={
                    p.relative_to(self.run_dir).as_posix(): file_digest(p)
                    for p in sorted(outputs.values())
                },
                cache_hit=False,
                wall_clock_s=elapsed,
            )
            # persist after each stage so a failed run still resumes from here
            manifest.save(self.run_dir)
            logger.info(f"Stage '{stage}': done in {elapsed:.3f}s")

        manifest.save(self.run_dir)
        return manifest

    def _outputs_intact(self, record: StageRecord) -> bool:
        for name, digest in record.outputs.items():
            path = self.path(name)
            if not path.exists() or file_digest(path) != digest:
                return False
        return True

    # -- shared helpers ------------------------------------------------------

    def _train(self) -> list[Sample]:
        return read_samples(self.path(TRAIN_FILE))

    def _test(self) -> list[Sample]:
        return read_samples(self.path(TEST_FILE))

    def _in_group(self, samples: list[Sample], group: str) -> list[Sample]:
        styles = set(self.config.group_styles(group))
        return [s for s in samples if s.style in styles]

    def _client(self) -> GatewayClient:
        gateway = self.config.gateway
        if gateway.is_mock:
            if self._mock is None:
                self._mock = self._build_mock()
            return self._mock.client()
        return GatewayClient(gateway.to_settings(), transport=self.transport)

    def _build_mock(self) -> MockModel:
        """Scripted teacher and student answers for every known sample."""
        samples = read_samples(self._samples_path()) if self._samples_path().exists() else []
        synthetic = self.config.synthetic
        teacher_kwargs = {}
        student_kwargs = {}
        if synthetic is not None:
            teacher_kwargs = {"wrong_rate": synthetic.teacher_wrong_rate, "drop_rate": synthetic.teacher_drop_rate}
            student_kwargs = {"accuracy": synthetic.student_accuracy}
        script = mock_teacher_script(samples, seed=self.config.seed, **teacher_kwargs)
        script.update(mock_student_script(samples, seed=self.config.seed, **student_kwargs))
        logger.info(f"Mock gateway scripted {len(script)} prompts")
        return mock_model(script)

    def _image_for(self, sample: Sample) -> ImagePayload | None:
        images_dir = self.config.gateway.images_dir
        if images_dir is None:
            return None
        path = images_dir / sample.image_ref
        if not path.is_file():
            logger.warning(f"Image not found for '{sample.id}': {path}")
            return None
        media_type = mimetypes.guess_type(path.name)[0] or "image/jpeg"
        return ImagePayload(data=path.read_bytes(), media_type=media_type)

    def _requests(self, samples: list[Sample], kind: TemplateKind, model_id: str) -> list[GenerationRequest]:
        decode = DecodeParams(
            temperature=self.config.gateway.temperature,
            max_tokens=self.config.gateway.max_tokens,
        )
        return [
            GenerationRequest(
                prompt=compose_prompt(sample.style, kind, sample.caption),
                model_id=model_id,
                image=self._image_for(sample),
                decode=decode,
            )
            for sample in samples
        ]

    def _load_policy(self, path: Path | None) -> ToyPolicy:
        if path is None:
            return base_policy(self.config.seed, feature_dim=NUM_FEATURES)
        return ToyPolicy.load(path)

    def _grpo_init_path(self, group: str) -> Path:
        if "sft" in self.config.stages or self.config.inputs.policy is None:
            return self.path(f"policy-sft-{group}.npy")
        return self.config.inputs.policy

    # -- stages --------------------------------------------------------------

    def _ingest(self) -> dict[str, Path]:
        samples: list[Sample] = []
        for dataset in self.config.datasets:
            report = ingest(
                dataset.path,
                dataset.adapter,
                dataset.style,
                split=dataset.split,
                threshold=dataset.threshold,
            )
            samples.extend(report.samples)
        if self.config.synthetic is not None:
            synthetic = self.config.synthetic
            samples.extend(make_synthetic_samples(synthetic.n, synthetic.seed, synthetic.styles))

        selected = set(self.config.styles)
        dropped = sum(1 for s in samples if s.style not in selected)
        if dropped:
            logger.info(f"Dropping {dropped} samples outside run.styles")
        samples = [s for s in samples if s.style in selected]
        if not samples:
            raise StageError("ingest", "no samples for the selected styles")
        return {"samples": write_samples(samples, self.path(SAMPLES_FILE))}

    def _split(self) -> dict[str, Path]:
        samples = read_samples(self._samples_path())
        train, test = split(
            samples,
            policy=self.config.split_policy,
            seed=self.config.split_seed,
            train_fraction=self.config.train_fraction,
        )
        if self.config.budget.total is not None:
            train = fixed_budget_sample(group_by_style(train), self.config.budget.total, self.config.seed)
        return {
            "train": write_samples(train, self.path(TRAIN_FILE)),
            "test": write_samples(test, self.path(TEST_FILE)),
        }

    def _distill(self) -> dict[str, Path]:
        train = self._train()
        teacher = self.config.gateway.teacher_model
        requests = self._requests(train, TemplateKind.TEACHER_COT, teacher)
        with self._client() as client:
            results = client.generate_batch(requests, max_in_flight=self.config.gateway.max_in_flight)

        records = [
            TraceRecord(
                sample_id=sample.id,
                style=sample.style,
                teacher_model_id=teacher,
                raw_text=result.output.text if result.success else "",
                error=None if result.success else str(result.error),
                gold_label=sample.gold_label,
            )
            for sample, result in zip(train, results)
        ]
        failed = sum(1 for r in records if r.error)
        if failed:
            logger.warning(f"{failed} of {len(records)} teacher requests failed")
        return {"traces": write_traces(records, self.path(TRACES_FILE))}

    def _filter(self) -> dict[str, Path]:
        by_id = {s.id: s for s in self._train()}
        build = build_corpus(read_traces(self._traces_path()), by_id)
        records, report = build.records, build.report

        per_style: dict[str, dict[str, int]] = {}
        for record in records:
            bucket = per_style.setdefault(record.style.value, {"kept": 0, "rejected": 0})
            bucket["kept" if record.kept else "rejected"] += 1
        stats = {
            "counts": report.counts,
            "gateway_errors": build.gateway_errors,
            "unknown_samples": build.unknown_samples,
            "per_style": per_style,
            "step_lengths": step_length_stats([trace for _, trace in report.kept]),
        }
        return {
            "corpus": write_corpus(records, self.path(CORPUS_FILE)),
            "stats": _write_json(self.path(FILTER_STATS_FILE), stats),
        }

    def _export_sft(self) -> dict[str, Path]:
        train = self._train()
        records: list[SftRecord] = []
        if self.config.sft_target == "binary":
            for sample in train:
                records.append(SftRecord(
                    sample_id=sample.id,
                    style=sample.style,
                    prompt=compose_prompt(sample.style, TemplateKind.RLVR_TAGGED, sample.caption),
                    completion=binary_completion(sample.style, sample.gold_label),
                ))
        else:
            by_id = {s.id: s for s in train}
            for record in read_corpus(self._corpus_path()):
                sample = by_id.get(record.sample_id)
                if not record.kept or sample is None:
                    continue
                records.append(SftRecord(
                    sample_id=sample.id,
                    style=sample.style,
                    prompt=compose_prompt(sample.style, TemplateKind.RLVR_TAGGED, sample.caption),
                    completion=cot_completion(sample.style, record.trace.steps[:4], record.trace.final_label),
                ))
        records.sort(key=lambda r: r.sample_id)
        logger.info(f"Exported {len(records)} SFT-{self.config.sft_target} records")
        return {"sft": write_sft_records(records, self.path(SFT_FILE))}

    def _sft(self) -> dict[str, Path]:
        by_id = {s.id: s for s in self._train()}
        records = read_sft_records(self.path(SFT_FILE))
        outputs: dict[str, Path] = {}
        for group in self.config.groups:
            styles = set(self.config.group_styles(group))
            labeled = []
            for record in records:
                sample = by_id.get(record.sample_id)
                if sample is None or sample.style not in styles:
                    continue
                task = ToyTask.from_samples([sample])
                labeled.append((task.features[0], action_for_completion(record.completion, sample.style)))
            if not labeled:
                raise StageError("sft", f"no SFT records for group '{group}'")

            result = sft_warmup(self._load_policy(None), labeled, self.config.sft)
            outputs[f"policy_{group}"] = result.policy.save(self.path(f"policy-sft-{group}.npy"))
            outputs[f"log_{group}"] = _write_json(
                self.path(f"sft-{group}.json"),
                {"records": len(labeled), "epoch_losses": result.epoch_losses},
            )
        return outputs

    def _grpo(self) -> dict[str, Path]:
        train = self._train()
        reward = partial(total_reward, strict_acc=self.config.strict_acc)
        outputs: dict[str, Path] = {}
        for group in self.config.groups:
            task = ToyTask.from_samples(self._in_group(train, group))
            init = self._grpo_init_path(group) if self.config.grpo_init == "sft" else None
            policy = self._load_policy(init)
            reference = policy.freeze()
            report = train_grpo(policy, reference, task, self.config.grpo, reward=reward)
            outputs[f"policy_{group}"] = policy.save(self.path(f"policy-grpo-{group}.npy"))
            outputs[f"log_{group}"] = _write_json(self.path(f"grpo-{group}.json"), report.to_records())
        return outputs

    def _group_predictions(self, group: str, test: list[Sample], policy: ToyPolicy) -> dict[str, str]:
        samples = self._in_group(test, group)
        if not samples:
            return {}
        labels = greedy_labels(policy, ToyTask.from_samples(samples))
        return {sample.id: label for sample, label in zip(samples, labels)}

    def _metrics_by_style(self, test: list[Sample], predictions: dict[str, str]) -> dict[StyleId, Metrics]:
        metrics: dict[StyleId, Metrics] = {}
        for style_id in self.config.styles:
            samples = [s for s in test if s.style == style_id]
            if not samples:
                continue
            style = get_style(style_id)
            metrics[style_id] = evaluate(
                [predictions.get(s.id) for s in samples],
                [s.gold_label for s in samples],
                style.positive_label,
                negative=style.negative_label,
            )
        return metrics

    def _eval(self) -> dict[str, Path]:
        test = self._test()
        predictions: dict[str, str] = {}
        for group in self.config.groups:
            policy = self._load_policy(self._final_policy_path(group))
            predictions.update(self._group_predictions(group, test, policy))

        table = compare_setups({self.config.setup or "run": self._metrics_by_style(test, predictions)})
        for style, metrics in next(iter(table.rows.values())).items():
            acc, f1 = metrics.to_row()
            logger.info(f"{style.value}: Acc {acc} F1 {f1}")
        emit_report(table, self.path("metrics.json"), "json")
        emit_report(table, self.path("metrics.md"), "markdown")
        return {
            "metrics": self.path("metrics.json"),
            "metrics_md": self.path("metrics.md"),
            "predictions": _write_json(self.path("predictions.json"), dict(sorted(predictions.items()))),
        }

    def _analyze(self) -> dict[str, Path]:
        test = self._test()
        base = self._load_policy(None)
        reports: dict[str, DisagreementReport] = {}
        for group in self.config.groups:
            trained = self._load_policy(self._final_policy_path(group))
            trained_preds = self._group_predictions(group, test, trained)
            base_preds = self._group_predictions(group, test, base)
            for style_id in self.config.group_styles(group):
                samples = [s for s in test if s.style == style_id]
                reports[style_id.value] = disagreement_report(
                    [trained_preds[s.id] for s in samples],
                    [base_preds[s.id] for s in samples],
                    [s.gold_label for s in samples],
                )

        lines = []
        for style, report in reports.items():
            lines.append(f"## {style}\n")
            lines.append(render_report(report, "markdown"))
        markdown_path = self.path("analysis.md")
        with open(markdown_path, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines))
        return {
            "analysis": _write_json(
                self.path("analysis.json"),
                {style: report.to_dict() for style, report in reports.items()},
            ),
            "analysis_md": markdown_path,
        }

    def _gateway_eval(self) -> dict[str, Path]:
        test = self._test()
        requests = self._requests(test, TemplateKind.RLVR_TAGGED, self.config.gateway.student_model)
        with self._client() as client:
            results = client.generate_batch(requests, max_in_flight=self.config.gateway.max_in_flight)

        predictions: dict[str, str | None] = {}
        rewards: dict[StyleId, list[int]] = {}
        formatted: dict[StyleId, list[int]] = {}
        errors = 0
        for sample, result in zip(test, results):
            if not result.success:
                errors += 1
                predictions[sample.id] = None
                rewards.setdefault(sample.style, []).append(0)
                formatted.setdefault(sample.style, []).append(0)
                continue
            breakdown = total_reward(
                result.output.text, sample.gold_label, sample.style, strict_acc=self.config.strict_acc
            )
            predictions[sample.id] = breakdown.predicted_label
            rewards.setdefault(sample.style, []).append(breakdown.total)
            formatted.setdefault(sample.style, []).append(breakdown.r_format)

        metrics = self._metrics_by_style(test, predictions)
        summary = {
            "model": self.config.gateway.student_model,
            "errors": errors,
            "styles": {
                style.value: {
                    "metrics": m.to_dict(),
                    "mean_reward": round(float(np.mean(rewards[style])), 6),
                    "format_rate": round(float(np.mean(formatted[style])), 6),
                }
                for style, m in metrics.items()
            },
        }
        table = compare_setups({self.config.gateway.student_model: metrics})
        emit_report(table, self.path("gateway_eval.md"), "markdown")
        return {
            "gateway_eval": _write_json(self.path("gateway_eval.json"), summary),
            "gateway_eval_md": self.path("gateway_eval.md"),
        }


def run(config: RunConfig, transport: httpx.BaseTransport | None = None) -> RunManifest:
    """Validate ``config`` and execute it.

    Raises:
        ConfigValidationError: The config has violations.
        StageError: A stage failed; the cause is chained.
    """
    violations = validate(config)
    if violations:
        raise ConfigValidationError(violations)
    return Pipeline(config, transport=transport).run()
