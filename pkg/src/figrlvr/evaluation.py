"""Accuracy/F1, cross-style transfer gains, disagreement reports and renderers."""

from __future__ import annotations

import csv
import io
import json
import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence, TextIO, Union

import numpy as np
from sklearn.metrics import confusion_matrix, f1_score

from .errors import RejectedInputError
from .styles import StyleId, get_style, list_styles

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("json", "csv", "markdown")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Metrics":
        return cls(
            accuracy=float(data["accuracy"]),
            f1=float(data["f1"]),
            tp=int(data.get("tp", 0)),
            fp=int(data.get("fp", 0)),
            tn=int(data.get("tn", 0)),
            fn=int(data.get("fn", 0)),
        )

    def to_row(self) -> tuple[str, str]:
        """Accuracy x100 and F1, both at two decimals."""
        return f"{self.accuracy * 100:.2f}", f"{self.f1:.2f}"


@dataclass
class TransferGainMatrix:
    """gains[s][t] = metric(SFT on s, then GRPO on t) - metric(GRPO-only on t)."""
    styles: tuple[StyleId, ...]
    gains: np.ndarray
    baseline: dict[StyleId, float]
    metric: str = "accuracy"

    def gain(self, source: StyleId | str, target: StyleId | str) -> float:
        return float(
            self.gains[self.styles.index(get_style(source).id), self.styles.index(get_style(target).id)]
        )

    def argmax_per_column(self) -> dict[StyleId, StyleId]:
        """Best source style for each target style."""
        best = np.argmax(self.gains, axis=0)
        return {target: self.styles[int(best[j])] for j, target in enumerate(self.styles)}

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "styles": [s.value for s in self.styles],
            "baseline": {s.value: v for s, v in self.baseline.items()},
            "gains": self.gains.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TransferGainMatrix":
        return cls(
            styles=tuple(StyleId(s) for s in data["styles"]),
            gains=np.array(data["gains"], dtype=np.float64),
            baseline={StyleId(k): float(v) for k, v in data["baseline"].items()},
            metric=data.get("metric", "accuracy"),
        )


@dataclass(frozen=True)
class DisagreementReport:
    n_disagreed: int
    a_correct: int
    b_correct: int
    a_win_rate: float

    def win_rate_percent(self) -> str:
        return f"{self.a_win_rate * 100:.1f}"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DisagreementReport":
        return cls(
            n_disagreed=int(data["n_disagreed"]),
            a_correct=int(data["a_correct"]),
            b_correct=int(data["b_correct"]),
            a_win_rate=float(data["a_win_rate"]),
        )


@dataclass
class ResultTable:
    """Metrics per setup (rows) and style (columns)."""
    rows: dict[str, dict[StyleId, Metrics]] = field(default_factory=dict)

    def styles(self) -> list[StyleId]:
        present = {style for row in self.rows.values() for style in row}
        return [s.id for s in list_styles() if s.id in present]

    def column_best(self, attribute: str = "accuracy") -> dict[StyleId, str]:
        best: dict[StyleId, str] = {}
        for style in self.styles():
            scored = [(getattr(row[style], attribute), name) for name, row in self.rows.items() if style in row]
            best[style] = max(scored)[1]
        return best

    def to_dict(self) -> dict:
        return {
            name: {style.value: metrics.to_dict() for style, metrics in row.items()}
            for name, row in self.rows.items()
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ResultTable":
        return cls(
            rows={
                name: {StyleId(s): Metrics.from_dict(m) for s, m in row.items()}
                for name, row in data.items()
            }
        )


Artifact = Union[Metrics, TransferGainMatrix, DisagreementReport, ResultTable]


def compare_setups(results: Mapping[str, Mapping[StyleId | str, Metrics]]) -> ResultTable:
    """Setup rows by style columns, rows kept in the order given."""
    return ResultTable(
        rows={name: {get_style(s).id: m for s, m in row.items()} for name, row in results.items()}
    )


def _check_lengths(*columns: Sequence) -> None:
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise RejectedInputError(f"length mismatch: {[len(c) for c in columns]}")


def evaluate(
    predictions: Sequence[str | None],
    golds: Sequence[str],
    positive: str,
    *,
    negative: str | None = None,
    macro: bool = False,
) -> Metrics:
    """Confusion counts, accuracy and F1 with ``positive`` as the positive class.

    A missing prediction (``None``) counts as wrong. ``macro=True`` reports the
    mean of the positive- and negative-class F1 instead.
    """
    _check_lengths(predictions, golds)
    if not golds:
        raise RejectedInputError("evaluate needs at least one prediction")
    if negative is not None:
        vocabulary = {positive, negative}
        bad = [g for g in list(golds) + [p for p in predictions if p is not None] if g not in vocabulary]
        if bad:
            raise RejectedInputError(f"labels outside {sorted(vocabulary)}: {bad[:3]}")

    y_true = np.array([g == positive for g in golds], dtype=bool)
    # a missing prediction is scored as the label opposite to gold
    y_pred = np.array(
        [(p == positive) if p is not None else not t for p, t in zip(predictions, y_true)],
        dtype=bool,
    )

    tn, fp, fn, tp = (int(v) for v in confusion_matrix(y_true, y_pred, labels=[False, True]).ravel())
    accuracy = (tp + tn) / len(y_true)
    if macro:
        f1 = float(f1_score(y_true, y_pred, labels=[False, True], average="macro", zero_division=0))
    else:
        f1 = float(f1_score(y_true, y_pred, pos_label=True, average="binary", zero_division=0))
    return Metrics(accuracy=accuracy, f1=f1, tp=tp, fp=fp, tn=tn, fn=fn)


def transfer_gain_matrix(
    results: Mapping[tuple[StyleId | str, StyleId | str], Metrics],
    baselines: Mapping[StyleId | str, Metrics],
    metric: str = "accuracy",
) -> TransferGainMatrix:
    """Subtract each target's GRPO-only metric from every (source, target) cell."""
    if metric not in ("accuracy", "f1"):
        raise RejectedInputError(f"Unknown metric '{metric}'")
    styles = tuple(s.id for s in list_styles())
    cells = {(get_style(s).id, get_style(t).id): m for (s, t), m in results.items()}
    base = {get_style(t).id: m for t, m in baselines.items()}

    for target in styles:
        if target not in base:
            raise RejectedInputError(f"missing baseline for target '{target.value}'")
    gains = np.zeros((len(styles), len(styles)), dtype=np.float64)
    for i, source in enumerate(styles):
        for j, target in enumerate(styles):
            if (source, target) not in cells:
                raise RejectedInputError(f"missing cell ({source.value}, {target.value})")
            gains[i, j] = getattr(cells[(source, target)], metric) - getattr(base[target], metric)
    return TransferGainMatrix(
        styles=styles,
        gains=gains,
        baseline={t: float(getattr(base[t], metric)) for t in styles},
        metric=metric,
    )


def disagreement_report(
    preds_a: Sequence[str],
    preds_b: Sequence[str],
    golds: Sequence[str],
) -> DisagreementReport:
    """Count who is right where the two prediction lists differ."""
    _check_lengths(preds_a, preds_b, golds)
    disagreed = [(a, b, g) for a, b, g in zip(preds_a, preds_b, golds) if a != b]
    a_correct = sum(1 for a, _, g in disagreed if a == g)
    b_correct = sum(1 for _, b, g in disagreed if b == g)
    n = len(disagreed)
    return DisagreementReport(
        n_disagreed=n,
        a_correct=a_correct,
        b_correct=b_correct,
        a_win_rate=a_correct / n if n else 0.0,
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _table_rows(artifact: Artifact) -> tuple[list[str], list[list[str]]]:
    if isinstance(artifact, Metrics):
        return ["Acc", "F1"], [list(artifact.to_row())]

    if isinstance(artifact, DisagreementReport):
        return (
            ["Disagreed", "A Correct", "B Correct", "Win Rate (%)"],
            [[
                str(artifact.n_disagreed),
                str(artifact.a_correct),
                str(artifact.b_correct),
                artifact.win_rate_percent(),
            ]],
        )

    if isinstance(artifact, TransferGainMatrix):
        scale = 100.0 if artifact.metric == "accuracy" else 1.0
        header = ["Source \\ Target"] + [s.value for s in artifact.styles]
        rows = [
            [source.value] + [f"{artifact.gains[i, j] * scale:+.2f}" for j in range(len(artifact.styles))]
            for i, source in enumerate(artifact.styles)
        ]
        return header, rows

    if isinstance(artifact, ResultTable):
        styles = artifact.styles()
        header = ["Setup"]
        for style in styles:
            header += [f"{style.value} Acc", f"{style.value} F1"]
        rows = []
        for name, row in artifact.rows.items():
            cells = [name]
            for style in styles:
                cells += list(row[style].to_row()) if style in row else ["-", "-"]
            rows.append(cells)
        return header, rows

    raise RejectedInputError(f"Cannot render {type(artifact).__name__}")


def render_report(artifact: Artifact, fmt: str = "markdown") -> str:
    if fmt not in REPORT_FORMATS:
        raise RejectedInputError(f"Unknown format '{fmt}'. Valid formats: {', '.join(REPORT_FORMATS)}")
    if fmt == "json":
        if not hasattr(artifact, "to_dict"):
            raise RejectedInputError(f"Cannot render {type(artifact).__name__}")
        return json.dumps(artifact.to_dict(), indent=2, sort_keys=True) + "\n"

    header, rows = _table_rows(artifact)
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buffer.getvalue()

    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


@contextmanager
def _open_sink(sink: Path | str | TextIO) -> Iterator[TextIO]:
    if isinstance(sink, (str, Path)):
        path = Path(sink)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            yield f
    else:
        yield sink


def emit_report(artifact: Artifact, sink: Path | str | TextIO, fmt: str = "markdown") -> None:
    """Write an artifact as JSON, CSV or a markdown table."""
    text = render_report(artifact, fmt)
    with _open_sink(sink) as out:
        out.write(text)
    logger.debug(f"Emitted {type(artifact).__name__} as {fmt}")
