"""Parsing of teacher CoT traces and student tagged outputs.

Teacher traces follow the five-step schema; each step starts at the beginning of
a line with ``Step k:``, optionally wrapped in markdown bold markers:

    **Step 1:** What the image shows: ...
    Step 2: The caption reads ...
    ...
    Step 5: Sarcastic.

Student outputs must be exactly one think block followed by one answer block:

    <think> reasoning (Step 1 to Step 4) </think><answer> sarcastic </answer>

``filter_corpus`` keeps a trace iff it parses and its final label equals the
sample's gold label.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple, Sequence

import numpy as np

from .errors import FormatError, TraceParseError
from .styles import FigurativeStyle, StyleId, get_style

if TYPE_CHECKING:
    from .dataset_io import Sample

logger = logging.getLogger(__name__)

NUM_STEPS = 5

STEP_MARKER_RE = re.compile(r"^[ \t]*(?:\*\*|__)?Step (\d+):(?:\*\*|__)?", re.MULTILINE)

TAGGED_OUTPUT_RE = re.compile(
    r"^\s*<think>(.*?)</think>\s*<answer>(.*?)</answer>\s*$",
    re.DOTALL,
)
_TAGS = ("<think>", "</think>", "<answer>", "</answer>")


class RejectReason(str, Enum):
    MISSING_STEPS = "missing_steps"
    UNPARSEABLE_LABEL = "unparseable_label"
    LABEL_MISMATCH = "label_mismatch"


@dataclass(frozen=True)
class CotTrace:
    """A parsed five-step teacher reasoning chain.

    Attributes:
        steps: Trimmed bodies of Step 1..Step 5.
        final_label: Label extracted from the Step 5 body.
        raw: Original trace text.
    """
    steps: tuple[str, ...]
    final_label: str
    raw: str

    def to_dict(self) -> dict:
        return {"steps": list(self.steps), "final_label": self.final_label, "raw": self.raw}

    @classmethod
    def from_dict(cls, data: dict) -> "CotTrace":
        return cls(steps=tuple(data["steps"]), final_label=data["final_label"], raw=data["raw"])


@dataclass(frozen=True)
class TaggedOutput:
    think: str
    answer: str
    raw: str


class Rejection(NamedTuple):
    sample: "Sample"
    reason: RejectReason
    raw_text: str


@dataclass
class FilterReport:
    """Outcome of corpus filtering, aligned with input order within each list."""
    kept: list[tuple["Sample", CotTrace]] = field(default_factory=list)
    rejected: list[Rejection] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        counts = {reason.value: 0 for reason in RejectReason}
        for item in self.rejected:
            counts[item.reason.value] += 1
        counts["kept"] = len(self.kept)
        return counts

    @property
    def total(self) -> int:
        return len(self.kept) + len(self.rejected)


def canonical_text(raw: str) -> str:
    """Lowercase, trim and collapse internal whitespace."""
    return " ".join(raw.lower().split())


def normalize_label(raw: str, style: FigurativeStyle | StyleId | str) -> str:
    """Map a raw label string onto the style's closed vocabulary.

    Raises:
        TraceParseError: ``unparseable_label`` when there is no exact match.
    """
    resolved = get_style(style)
    candidate = canonical_text(raw)
    if resolved.is_label(candidate):
        return candidate
    raise TraceParseError(
        RejectReason.UNPARSEABLE_LABEL.value,
        f"'{raw.strip()}' is not one of {list(resolved.labels)}",
    )


def scan_label(text: str, style: FigurativeStyle | StyleId | str) -> str | None:
    """Find a label by containment, checking the longer label first.

    "not sarcastic" contains "sarcastic", so the negative label must win when both
    substrings are present.
    """
    resolved = get_style(style)
    haystack = canonical_text(text)
    for label in sorted(resolved.labels, key=len, reverse=True):
        if label in haystack:
            return label
    return None


def _locate_steps(text: str) -> list[tuple[int, int]] | None:
    """Return (start, end) of the first ``Step k:`` marker for k = 1..5, or None."""
    first: dict[int, tuple[int, int]] = {}
    for match in STEP_MARKER_RE.finditer(text):
        k = int(match.group(1))
        if 1 <= k <= NUM_STEPS and k not in first:
            first[k] = (match.start(), match.end())
    if len(first) < NUM_STEPS:
        return None
    spans = [first[k] for k in range(1, NUM_STEPS + 1)]
    if any(a[0] >= b[0] for a, b in zip(spans, spans[1:])):
        return None
    return spans


def parse_teacher_trace(text: str, style: FigurativeStyle | StyleId | str) -> CotTrace:
    """Parse a five-step teacher trace and extract its final label.

    Raises:
        TraceParseError: ``missing_steps`` if a marker is absent, out of order or
            a Step 1-4 body is empty; ``unparseable_label`` if Step 5 holds
            neither label.
    """
    resolved = get_style(style)
    spans = _locate_steps(text)
    if spans is None:
        raise TraceParseError(
            RejectReason.MISSING_STEPS.value,
            "expected 'Step 1:' through 'Step 5:' in order",
        )

    bounds = [span[1] for span in spans]
    ends = [span[0] for span in spans[1:]] + [len(text)]
    steps = tuple(text[start:end].strip() for start, end in zip(bounds, ends))

    empty = [k for k, body in enumerate(steps[:-1], start=1) if not body]
    if empty:
        raise TraceParseError(
            RejectReason.MISSING_STEPS.value,
            f"empty body for step(s) {empty}",
        )

    final_label = scan_label(steps[-1], resolved)
    if final_label is None:
        raise TraceParseError(
            RejectReason.UNPARSEABLE_LABEL.value,
            f"Step 5 names neither {resolved.positive_label!r} nor {resolved.negative_label!r}",
        )
    return CotTrace(steps=steps, final_label=final_label, raw=text)


def format_cot_trace(trace: CotTrace) -> str:
    """Serialize a trace back into ``Step k:`` lines."""
    return "\n".join(f"Step {k}: {body}" for k, body in enumerate(trace.steps, start=1))


def parse_tagged_output(text: str) -> TaggedOutput:
    """Extract the single think block and single answer block.

    Raises:
        FormatError: On missing or repeated tags, wrong order, or non-whitespace
            text outside the blocks.
    """
    for tag in _TAGS:
        count = text.count(tag)
        if count != 1:
            raise FormatError(f"expected exactly one {tag}, found {count}")
    match = TAGGED_OUTPUT_RE.match(text)
    if match is None:
        raise FormatError("tags out of order or text outside the think/answer blocks")
    return TaggedOutput(think=match.group(1).strip(), answer=match.group(2).strip(), raw=text)


def _classify(sample: "Sample", text: str) -> CotTrace | RejectReason:
    try:
        trace = parse_teacher_trace(text, sample.style)
    except TraceParseError as e:
        return RejectReason(e.reason)
    if trace.final_label != sample.gold_label:
        return RejectReason.LABEL_MISMATCH
    return trace


def filter_corpus(
    pairs: Sequence[tuple["Sample", str]],
    max_workers: int | None = None,
) -> FilterReport:
    """Keep traces that parse and agree with the gold label.

    Args:
        pairs: (sample, raw trace text) in corpus order.
        max_workers: Optional thread count; results keep input order either way.
    """
    if max_workers and max_workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(lambda p: _classify(*p), pairs))
    else:
        outcomes = [_classify(sample, text) for sample, text in pairs]

    report = FilterReport()
    for (sample, text), outcome in zip(pairs, outcomes):
        if isinstance(outcome, RejectReason):
            report.rejected.append(Rejection(sample, outcome, text))
        else:
            report.kept.append((sample, outcome))

    logger.info(f"Filtered {report.total} traces: {report.counts}")
    return report


def step_length_stats(traces: Sequence[CotTrace]) -> dict[str, dict[str, float]]:
    """Word-count min/mean/max per step, to surface degenerate bodies."""
    stats: dict[str, dict[str, float]] = {}
    if not traces:
        return stats
    lengths = np.array([[len(step.split()) for step in t.steps] for t in traces], dtype=float)
    for k in range(lengths.shape[1]):
        column = lengths[:, k]
        stats[f"step_{k + 1}"] = {
            "min": float(column.min()),
            "mean": round(float(column.mean()), 4),
            "max": float(column.max()),
        }
    return stats
