"""Dataset ingestion, split rules, budget sampling and corpus persistence.

All persisted files are UTF-8 JSON Lines. The first line is a header naming the
schema and its version:

    {"schema": "figrlvr.corpus", "version": 1}
    {"sample_id": "...", "style": "sarcasm", "kept": true, ...}

Ingest adapters:

    generic-jsonl   id, caption, image, label, style [, split, meta]
    mmsd2-like      image_id, text, label (1 = sarcastic)
    memotion-like   CSV: image_name, text_corrected, humour, offensive
    multimet-like   CSV: pic_id, text, metaphor (1 = metaphorical)
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import CorpusReadError, RejectedInputError, SchemaError, TraceParseError, VersionMismatchError
from .grpo import StepRecord, TrainReport
from .styles import StyleId, get_style, list_styles
from .trace_parser import CotTrace, FilterReport, RejectReason, filter_corpus, normalize_label

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CORPUS_SCHEMA = "figrlvr.corpus"
SAMPLES_SCHEMA = "figrlvr.samples"
TRACES_SCHEMA = "figrlvr.traces"
SFT_SCHEMA = "figrlvr.sft"
TRAIN_REPORT_SCHEMA = "figrlvr.train_report"

MEMOTION_HUMOR_LEVELS = ("not_funny", "funny", "very_funny", "hilarious")
MEMOTION_OFFENSE_LEVELS = ("not_offensive", "slight", "very_offensive", "hateful_offensive")


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class Sample:
    """One image-text instance with its style and binary gold label."""
    id: str
    style: StyleId
    caption: str
    image_ref: str
    gold_label: str
    split: Split | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        style = get_style(self.style)
        object.__setattr__(self, "style", style.id)
        if self.split is not None:
            object.__setattr__(self, "split", Split(self.split))
        if not style.is_label(self.gold_label):
            raise RejectedInputError(
                f"Sample '{self.id}': '{self.gold_label}' is not a {style.id.value} label"
            )

    @property
    def is_positive(self) -> bool:
        return self.gold_label == get_style(self.style).positive_label

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "style": self.style.value,
            "caption": self.caption,
            "image_ref": self.image_ref,
            "gold_label": self.gold_label,
            "split": self.split.value if self.split else None,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Sample":
        return cls(
            id=data["id"],
            style=StyleId(data["style"]),
            caption=data["caption"],
            image_ref=data["image_ref"],
            gold_label=data["gold_label"],
            split=Split(data["split"]) if data.get("split") else None,
            meta=dict(data.get("meta") or {}),
        )


@dataclass(frozen=True)
class DistilledRecord:
    """A teacher trace for one sample with its filtering outcome."""
    sample_id: str
    style: StyleId
    teacher_model_id: str
    kept: bool
    raw_text: str
    trace: CotTrace | None = None
    reject_reason: RejectReason | None = None

    def __post_init__(self):
        object.__setattr__(self, "style", get_style(self.style).id)
        if self.reject_reason is not None:
            object.__setattr__(self, "reject_reason", RejectReason(self.reject_reason))
        if self.kept and (self.trace is None or self.reject_reason is not None):
            raise RejectedInputError(f"Kept record '{self.sample_id}' needs a trace and no reject reason")
        if not self.kept and self.reject_reason is None:
            raise RejectedInputError(f"Rejected record '{self.sample_id}' needs a reject reason")

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "style": self.style.value,
            "teacher_model_id": self.teacher_model_id,
            "kept": self.kept,
            "reject_reason": self.reject_reason.value if self.reject_reason else None,
            "trace": self.trace.to_dict() if self.trace else None,
            "raw_text": self.raw_text,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DistilledRecord":
        return cls(
            sample_id=data["sample_id"],
            style=StyleId(data["style"]),
            teacher_model_id=data["teacher_model_id"],
            kept=bool(data["kept"]),
            raw_text=data["raw_text"],
            trace=CotTrace.from_dict(data["trace"]) if data.get("trace") else None,
            reject_reason=RejectReason(data["reject_reason"]) if data.get("reject_reason") else None,
        )


@dataclass(frozen=True)
class TraceRecord:
    """Raw teacher output for a sample, before filtering.

    ``gold_label`` travels with the trace so a traces file can be filtered on
    its own; it is ``None`` for traces written without one.
    """
    sample_id: str
    style: StyleId
    teacher_model_id: str
    raw_text: str
    error: str | None = None
    gold_label: str | None = None

    def __post_init__(self):
        style = get_style(self.style)
        object.__setattr__(self, "style", style.id)
        if self.gold_label is not None and not style.is_label(self.gold_label):
            raise RejectedInputError(
                f"Trace '{self.sample_id}': '{self.gold_label}' is not a {style.id.value} label"
            )

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "style": self.style.value,
            "teacher_model_id": self.teacher_model_id,
            "raw_text": self.raw_text,
            "error": self.error,
            "gold_label": self.gold_label,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TraceRecord":
        return cls(
            sample_id=data["sample_id"],
            style=StyleId(data["style"]),
            teacher_model_id=data["teacher_model_id"],
            raw_text=data["raw_text"],
            error=data.get("error"),
            gold_label=data.get("gold_label"),
        )

    def as_sample(self) -> Sample:
        """A minimal Sample carrying this trace's id, style and gold label."""
        if self.gold_label is None:
            raise RejectedInputError(f"Trace '{self.sample_id}' carries no gold label")
        return Sample(
            id=self.sample_id, style=self.style, caption="", image_ref="", gold_label=self.gold_label
        )


@dataclass(frozen=True)
class SftRecord:
    sample_id: str
    style: StyleId
    prompt: str
    completion: str

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "style": get_style(self.style).id.value,
            "prompt": self.prompt,
            "completion": self.completion,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SftRecord":
        return cls(
            sample_id=data["sample_id"],
            style=StyleId(data["style"]),
            prompt=data["prompt"],
            completion=data["completion"],
        )


@dataclass
class IngestReport:
    samples: list[Sample] = field(default_factory=list)
    unmappable: list[tuple[int, str]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# JSON Lines persistence
# ---------------------------------------------------------------------------

def _write_jsonl(path: Path, schema: str, rows: Iterable[dict], **header_fields: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {**header_fields, "schema": schema, "version": SCHEMA_VERSION}
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    return path


def _read_jsonl(path: Path, schema: str, parse: Callable[[dict], Any]) -> list:
    return _read_jsonl_with_header(path, schema, parse)[1]


def _read_jsonl_with_header(path: Path, schema: str, parse: Callable[[dict], Any]) -> tuple[dict, list]:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().split("\n")

    if not lines or not lines[0].strip():
        raise VersionMismatchError(f"{path}: missing header line")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise VersionMismatchError(f"{path}: unreadable header: {e}") from e
    if not isinstance(header, dict) or header.get("schema") != schema:
        raise VersionMismatchError(f"{path}: expected schema '{schema}', found {header!r}")
    if header.get("version") != SCHEMA_VERSION:
        raise VersionMismatchError(
            f"{path}: schema version {header.get('version')} is not supported "
            f"(expected {SCHEMA_VERSION})"
        )

    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            records.append(parse(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise CorpusReadError(line_no, f"{path}: {type(e).__name__}: {e}") from e
    return header, records


def write_corpus(records: Sequence[DistilledRecord], path: Path) -> Path:
    return _write_jsonl(path, CORPUS_SCHEMA, (r.to_dict() for r in records))


def read_corpus(path: Path) -> list[DistilledRecord]:
    """Read a corpus file.

    Raises:
        OSError: If the file cannot be read.
        VersionMismatchError: On a missing or foreign header.
        CorpusReadError: On a corrupted record, naming its line.
    """
    return _read_jsonl(path, CORPUS_SCHEMA, DistilledRecord.from_dict)


def write_samples(samples: Sequence[Sample], path: Path) -> Path:
    return _write_jsonl(path, SAMPLES_SCHEMA, (s.to_dict() for s in samples))


def read_samples(path: Path) -> list[Sample]:
    return _read_jsonl(path, SAMPLES_SCHEMA, Sample.from_dict)


def write_traces(records: Sequence[TraceRecord], path: Path) -> Path:
    return _write_jsonl(path, TRACES_SCHEMA, (r.to_dict() for r in records))


def read_traces(path: Path) -> list[TraceRecord]:
    return _read_jsonl(path, TRACES_SCHEMA, TraceRecord.from_dict)


def write_sft_records(records: Sequence[SftRecord], path: Path) -> Path:
    return _write_jsonl(path, SFT_SCHEMA, (r.to_dict() for r in records))


def read_sft_records(path: Path) -> list[SftRecord]:
    return _read_jsonl(path, SFT_SCHEMA, SftRecord.from_dict)


def write_train_report(report: TrainReport, path: Path) -> Path:
    """Write one line per optimizer step; the final accuracy rides in the header."""
    rows = (
        {"step": r.step, "mean_reward": r.mean_reward, "kl": r.kl, "loss": r.loss}
        for r in report.records
    )
    return _write_jsonl(path, TRAIN_REPORT_SCHEMA, rows, final_accuracy=report.final_accuracy)


def read_train_report(path: Path) -> TrainReport:
    header, records = _read_jsonl_with_header(path, TRAIN_REPORT_SCHEMA, lambda row: StepRecord(**row))
    return TrainReport(records=records, final_accuracy=header.get("final_accuracy"))


@dataclass
class CorpusBuild:
    """Distilled records for a traces file plus what was skipped on the way."""
    records: list[DistilledRecord]
    report: FilterReport
    gateway_errors: int = 0
    unknown_samples: int = 0

    @property
    def kept(self) -> list[DistilledRecord]:
        return [r for r in self.records if r.kept]

    @property
    def rejected(self) -> list[DistilledRecord]:
        return [r for r in self.records if not r.kept]

    def stats(self) -> dict[str, Any]:
        counts = self.report.counts
        return {
            "kept": counts.pop("kept"),
            "rejected": len(self.report.rejected),
            "by_reason": counts,
            "gateway_errors": self.gateway_errors,
            "unknown_samples": self.unknown_samples,
        }


def build_corpus(
    traces: Sequence[TraceRecord],
    samples: Mapping[str, Sample] | None = None,
    max_workers: int | None = None,
) -> CorpusBuild:
    """Filter teacher traces into distilled records sorted by sample id.

    Args:
        traces: Raw teacher traces; failed requests are counted and skipped.
        samples: Gold samples by id. Traces outside it are counted and skipped.
            When ``None`` each trace must carry its own gold label.
        max_workers: Passed to ``filter_corpus``.

    Raises:
        RejectedInputError: A trace without a gold label when ``samples`` is ``None``.
    """
    pairs: list[tuple[Sample, str]] = []
    models: dict[str, str] = {}
    errors = unknown = 0
    for trace in traces:
        if trace.error:
            errors += 1
            continue
        if samples is None:
            sample = trace.as_sample()
        else:
            sample = samples.get(trace.sample_id)
            if sample is None:
                unknown += 1
                continue
        pairs.append((sample, trace.raw_text))
        models[sample.id] = trace.teacher_model_id
    if unknown:
        logger.warning(f"{unknown} traces refer to samples that are not available")

    report = filter_corpus(pairs, max_workers=max_workers)
    records = [
        DistilledRecord(
            sample_id=sample.id,
            style=sample.style,
            teacher_model_id=models[sample.id],
            kept=True,
            raw_text=trace.raw,
            trace=trace,
        )
        for sample, trace in report.kept
    ]
    records += [
        DistilledRecord(
            sample_id=rejection.sample.id,
            style=rejection.sample.style,
            teacher_model_id=models[rejection.sample.id],
            kept=False,
            raw_text=rejection.raw_text,
            reject_reason=rejection.reason,
        )
        for rejection in report.rejected
    ]
    records.sort(key=lambda r: r.sample_id)
    return CorpusBuild(records=records, report=report, gateway_errors=errors, unknown_samples=unknown)


def validate_corpus(path: Path) -> dict[str, Any]:
    """Read a corpus and summarize it; raises like ``read_corpus``."""
    records = read_corpus(path)
    reasons = {reason.value: 0 for reason in RejectReason}
    styles: dict[str, int] = {}
    kept = 0
    for record in records:
        styles[record.style.value] = styles.get(record.style.value, 0) + 1
        if record.kept:
            kept += 1
        else:
            reasons[record.reject_reason.value] += 1
    return {
        "records": len(records),
        "kept": kept,
        "rejected": len(records) - kept,
        "reject_reasons": reasons,
        "styles": dict(sorted(styles.items())),
    }


# ---------------------------------------------------------------------------
# Ingest adapters
# ---------------------------------------------------------------------------

def _load_json_rows(path: Path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as f:
        if path.suffix == ".json":
            data = json.load(f)
            if not isinstance(data, list):
                raise SchemaError(0, f"{path}: expected a JSON array of rows")
            return data
        rows = []
        for row_no, line in enumerate(f):
            if line.strip():
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise SchemaError(row_no, f"invalid JSON: {e}") from e
        return rows


def _missing(value: Any) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and np.isnan(value):
        return True
    return isinstance(value, str) and not value.strip()


def _binary_label(value: Any, style: StyleId) -> str:
    """Map a source label field onto the style vocabulary without guessing."""
    resolved = get_style(style)
    if isinstance(value, bool):
        return resolved.positive_label if value else resolved.negative_label
    if isinstance(value, (int, np.integer)) or (isinstance(value, float) and float(value).is_integer()):
        if int(value) in (0, 1):
            return resolved.positive_label if int(value) == 1 else resolved.negative_label
        raise ValueError(f"label {value!r} is not 0 or 1")
    text = str(value).strip()
    if text in ("0", "1"):
        return resolved.positive_label if text == "1" else resolved.negative_label
    try:
        return normalize_label(text, resolved)
    except TraceParseError as e:
        raise ValueError(str(e)) from e


def _adapt_generic_jsonl(
    path: Path, style: StyleId | None, split: Split | None, threshold: int
) -> IngestReport:
    report = IngestReport()
    for row_no, row in enumerate(_load_json_rows(path)):
        if _missing(row.get("label")):
            raise SchemaError(row_no, "missing gold label")
        row_style = row.get("style") or (style.value if style else None)
        if not row_style:
            raise SchemaError(row_no, "no style in row and none given")
        for key in ("id", "caption"):
            if _missing(row.get(key)):
                raise SchemaError(row_no, f"missing '{key}'")
        try:
            resolved = get_style(row_style).id
            report.samples.append(
                Sample(
                    id=str(row["id"]),
                    style=resolved,
                    caption=str(row["caption"]),
                    image_ref=str(row.get("image") or ""),
                    gold_label=_binary_label(row["label"], resolved),
                    split=Split(row["split"]) if row.get("split") else split,
                    meta=dict(row.get("meta") or {}),
                )
            )
        except (ValueError, RejectedInputError) as e:
            report.unmappable.append((row_no, str(e)))
    return report


def _adapt_mmsd2(path: Path, style: StyleId | None, split: Split | None, threshold: int) -> IngestReport:
    report = IngestReport()
    for row_no, row in enumerate(_load_json_rows(path)):
        if _missing(row.get("label")):
            raise SchemaError(row_no, "missing gold label")
        if _missing(row.get("image_id")):
            raise SchemaError(row_no, "missing 'image_id'")
        image_id = str(row["image_id"])
        try:
            report.samples.append(
                Sample(
                    id=f"mmsd2-{image_id}",
                    style=StyleId.SARCASM,
                    caption=str(row.get("text", "")),
                    image_ref=f"{image_id}.jpg",
                    gold_label=_binary_label(row["label"], StyleId.SARCASM),
                    split=split,
                )
            )
        except ValueError as e:
            report.unmappable.append((row_no, str(e)))
    return report


def _ordinal_label(value: Any, levels: Sequence[str], threshold: int, style: StyleId) -> str:
    level = str(value).strip().lower()
    if level not in levels:
        raise ValueError(f"unknown level {value!r}; expected one of {list(levels)}")
    resolved = get_style(style)
    return resolved.positive_label if levels.index(level) >= threshold else resolved.negative_label


def _adapt_memotion(path: Path, style: StyleId | None, split: Split | None, threshold: int) -> IngestReport:
    frame = pd.read_csv(path)
    text_column = "text_corrected" if "text_corrected" in frame.columns else "text_ocr"
    wanted = [
        (StyleId.HUMOR, "humour", MEMOTION_HUMOR_LEVELS),
        (StyleId.OFFENSE, "offensive", MEMOTION_OFFENSE_LEVELS),
    ]
    if style is not None:
        wanted = [w for w in wanted if w[0] is style]
        if not wanted:
            raise RejectedInputError(f"memotion-like data has no '{style.value}' annotations")

    report = IngestReport()
    for row_no, row in enumerate(frame.to_dict(orient="records")):
        if _missing(row.get("image_name")):
            raise SchemaError(row_no, "missing 'image_name'")
        for style_id, column, levels in wanted:
            if _missing(row.get(column)):
                raise SchemaError(row_no, f"missing gold label '{column}'")
        caption = "" if _missing(row.get(text_column)) else str(row[text_column])
        image_name = str(row["image_name"])
        for style_id, column, levels in wanted:
            try:
                report.samples.append(
                    Sample(
                        id=f"memotion-{image_name}#{style_id.value}",
                        style=style_id,
                        caption=caption,
                        image_ref=image_name,
                        gold_label=_ordinal_label(row[column], levels, threshold, style_id),
                        split=split,
                        meta={"source_level": str(row[column]).strip().lower()},
                    )
                )
            except ValueError as e:
                report.unmappable.append((row_no, f"{column}: {e}"))
    return report


def _adapt_multimet(path: Path, style: StyleId | None, split: Split | None, threshold: int) -> IngestReport:
    frame = pd.read_csv(path)
    report = IngestReport()
    for row_no, row in enumerate(frame.to_dict(orient="records")):
        if _missing(row.get("metaphor")):
            raise SchemaError(row_no, "missing gold label 'metaphor'")
        if _missing(row.get("pic_id")):
            raise SchemaError(row_no, "missing 'pic_id'")
        pic_id = str(row["pic_id"])
        try:
            report.samples.append(
                Sample(
                    id=f"multimet-{pic_id}",
                    style=StyleId.METAPHOR,
                    caption="" if _missing(row.get("text")) else str(row["text"]),
                    image_ref=pic_id,
                    gold_label=_binary_label(row["metaphor"], StyleId.METAPHOR),
                    split=split,
                )
            )
        except ValueError as e:
            report.unmappable.append((row_no, str(e)))
    return report


ADAPTERS: dict[str, Callable[[Path, StyleId | None, Split | None, int], IngestReport]] = {
    "generic-jsonl": _adapt_generic_jsonl,
    "mmsd2-like": _adapt_mmsd2,
    "memotion-like": _adapt_memotion,
    "multimet-like": _adapt_multimet,
}


def ingest(
    path: Path,
    adapter: str,
    style: StyleId | str | None = None,
    *,
    split: Split | str | None = None,
    threshold: int = 1,
) -> IngestReport:
    """Map a source dataset onto Samples.

    Args:
        path: Source file.
        adapter: One of ``ADAPTERS``.
        style: Style for rows that do not name one, or the memotion style to keep.
        split: Split tag applied to rows without their own.
        threshold: Lowest ordinal level counted positive by the memotion adapter.

    Raises:
        RejectedInputError: Unknown adapter.
        OSError: Unreadable file.
        SchemaError: A row without a gold label or id, naming the row.
    """
    if adapter not in ADAPTERS:
        raise RejectedInputError(f"Unknown adapter '{adapter}'. Valid adapters: {', '.join(ADAPTERS)}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset not found: {path}")
    resolved_style = get_style(style).id if style else None
    resolved_split = Split(split) if split else None

    report = ADAPTERS[adapter](path, resolved_style, resolved_split, threshold)
    seen: set[str] = set()
    for sample in report.samples:
        if sample.id in seen:
            raise RejectedInputError(f"{path}: duplicate sample id '{sample.id}'")
        seen.add(sample.id)
    for row, cause in report.unmappable:
        logger.warning(f"{path}: row {row} not mapped: {cause}")
    logger.info(f"Ingested {len(report.samples)} samples from {path} ({adapter})")
    return report


# ---------------------------------------------------------------------------
# Splits and sampling
# ---------------------------------------------------------------------------

SPLIT_POLICIES = ("provided", "seeded_80_20")


def _allocate(sizes: Sequence[int], total: int) -> list[int]:
    """Largest-remainder apportionment of ``total`` across groups of ``sizes``."""
    n = sum(sizes)
    quotas = [size * total / n for size in sizes]
    counts = [int(np.floor(q)) for q in quotas]
    remaining = total - sum(counts)
    order = sorted(range(len(sizes)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:remaining]:
        counts[i] += 1
    return counts


def split(
    samples: Sequence[Sample],
    policy: str = "provided",
    seed: int = 0,
    train_fraction: float = 0.8,
) -> tuple[list[Sample], list[Sample]]:
    """Partition samples into (train, test), preserving input order in each.

    ``provided`` uses each sample's split tag. ``seeded_80_20`` draws a stratified
    split by (style, gold label), deterministic per seed.
    """
    if policy not in SPLIT_POLICIES:
        raise RejectedInputError(f"Unknown split policy '{policy}'. Valid: {', '.join(SPLIT_POLICIES)}")

    if policy == "provided":
        untagged = [s.id for s in samples if s.split is None]
        if untagged:
            raise RejectedInputError(
                f"{len(untagged)} sample(s) carry no split tag, e.g. '{untagged[0]}'"
            )
        train = [s for s in samples if s.split is Split.TRAIN]
        test = [s for s in samples if s.split is Split.TEST]
        return train, test

    if not 0.0 < train_fraction < 1.0:
        raise RejectedInputError(f"train_fraction must be in (0, 1), got {train_fraction}")

    strata: dict[tuple[str, str], list[int]] = {}
    for i, sample in enumerate(samples):
        strata.setdefault((sample.style.value, sample.gold_label), []).append(i)
    keys = sorted(strata)
    train_total = int(round(train_fraction * len(samples)))
    quotas = _allocate([len(strata[k]) for k in keys], train_total) if samples else []

    rng = np.random.default_rng(seed)
    train_idx: set[int] = set()
    for key, quota in zip(keys, quotas):
        members = strata[key]
        chosen = rng.permutation(len(members))[:quota]
        train_idx.update(members[j] for j in chosen)

    train, test = [], []
    for i, sample in enumerate(samples):
        if i in train_idx:
            train.append(replace(sample, split=Split.TRAIN))
        else:
            test.append(replace(sample, split=Split.TEST))
    logger.info(f"Split {len(samples)} samples (seed={seed}): {len(train)} train / {len(test)} test")
    return train, test


def group_by_style(samples: Iterable[Sample]) -> dict[StyleId, list[Sample]]:
    grouped: dict[StyleId, list[Sample]] = {}
    for sample in samples:
        grouped.setdefault(sample.style, []).append(sample)
    return grouped


def fixed_budget_sample(
    by_style: Mapping[StyleId | str, Sequence[Sample]],
    total: int,
    seed: int = 0,
) -> list[Sample]:
    """Draw ``total / len(by_style)`` training samples per style without replacement."""
    if not by_style:
        raise RejectedInputError("fixed_budget_sample needs at least one style")
    styles = {get_style(k).id: v for k, v in by_style.items()}
    if total <= 0 or total % len(styles) != 0:
        raise RejectedInputError(
            f"total {total} not divisible by style count {len(styles)}"
        )
    per_style = total // len(styles)

    rng = np.random.default_rng(seed)
    drawn: list[Sample] = []
    for style in (s.id for s in list_styles() if s.id in styles):
        pool = [s for s in styles[style] if s.split is not Split.TEST]
        if len(pool) < per_style:
            raise RejectedInputError(
                f"style '{style.value}' has {len(pool)} training samples, needs {per_style}"
            )
        chosen = np.sort(rng.choice(len(pool), size=per_style, replace=False))
        drawn.extend(pool[i] for i in chosen)
    logger.info(f"Budget sample: {per_style} per style across {len(styles)} style(s)")
    return drawn
