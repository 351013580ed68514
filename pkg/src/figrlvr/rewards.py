"""Verifiable rewards: R = R_acc + R_format.

Both components are integers in {0, 1}. Accuracy is scored independently of
format: when the tags are broken, the label comes from a whole-output scan.
``strict_acc`` switches to the conditioned reading where a badly formatted
output cannot earn accuracy.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

from .errors import FormatError, TraceParseError
from .styles import FigurativeStyle, StyleId, get_style
from .trace_parser import canonical_text, normalize_label, parse_tagged_output, scan_label

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewardBreakdown:
    r_acc: int
    r_format: int
    total: int
    predicted_label: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def accuracy_reward(predicted: str | None, gold: str) -> int:
    """1 iff a prediction is present and equals the gold label after normalization."""
    if predicted is None:
        return 0
    return int(canonical_text(predicted) == canonical_text(gold))


def format_reward(raw: str) -> int:
    """1 iff the output is exactly one think block followed by one answer block."""
    try:
        parse_tagged_output(raw)
    except FormatError:
        return 0
    return 1


def predict_label(raw: str, style: FigurativeStyle | StyleId | str) -> tuple[str | None, int]:
    """Return (predicted label, format reward) for a raw output."""
    try:
        tagged = parse_tagged_output(raw)
    except FormatError:
        return scan_label(raw, style), 0
    try:
        return normalize_label(tagged.answer, style), 1
    except TraceParseError:
        return None, 1


def total_reward(
    raw: str,
    gold: str,
    style: FigurativeStyle | StyleId | str,
    *,
    strict_acc: bool = False,
) -> RewardBreakdown:
    """Score one output against its gold label.

    Args:
        raw: Model output text.
        gold: Gold label, valid for ``style``.
        style: Style whose label vocabulary applies.
        strict_acc: Force r_acc to 0 whenever r_format is 0.
    """
    resolved = get_style(style)
    gold_label = normalize_label(gold, resolved)
    predicted, r_format = predict_label(raw, resolved)
    r_acc = accuracy_reward(predicted, gold_label)
    if strict_acc and not r_format:
        r_acc = 0
    return RewardBreakdown(r_acc=r_acc, r_format=r_format, total=r_acc + r_format, predicted_label=predicted)


def score_batch(
    items: Sequence[tuple[str, str, FigurativeStyle | StyleId | str]],
    *,
    strict_acc: bool = False,
    max_workers: int | None = None,
) -> list[RewardBreakdown]:
    """Score (raw, gold, style) triples; output order matches input order."""
    def score(item: tuple[str, str, FigurativeStyle | StyleId | str]) -> RewardBreakdown:
        raw, gold, style = item
        return total_reward(raw, gold, style, strict_acc=strict_acc)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(score, items))
    else:
        results = [score(item) for item in items]
    logger.debug(f"Scored {len(results)} outputs")
    return results
