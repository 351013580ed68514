"""Tests for metrics, transfer gains, disagreement analysis and report rendering."""

import io
import json

import numpy as np
import pytest

from figrlvr.errors import RejectedInputError
from figrlvr.evaluation import (
    DisagreementReport,
    Metrics,
    ResultTable,
    TransferGainMatrix,
    compare_setups,
    disagreement_report,
    emit_report,
    evaluate,
    render_report,
    transfer_gain_matrix,
)
from figrlvr.styles import StyleId

P, N = "sarcastic", "not sarcastic"

STYLES = ("sarcasm", "humor", "offense", "metaphor")

# GRPO-only accuracy per target, in style order
BASELINE = (0.7219, 0.6585, 0.4833, 0.5921)

# SFT source style -> accuracy per target after GRPO, in style order
TRANSFER = {
    "sarcasm": (0.8682, 0.7540, 0.5257, 0.6146),
    "humor": (0.8461, 0.7891, 0.5687, 0.6105),
    "offense": (0.7325, 0.7329, 0.5951, 0.6003),
    "metaphor": (0.7702, 0.6963, 0.5079, 0.6924),
}


def _metrics(accuracy, f1=0.5):
    return Metrics(accuracy=accuracy, f1=f1, tp=0, fp=0, tn=0, fn=0)


def _matrix(metric="accuracy"):
    results = {
        (source, target): _metrics(acc)
        for source, row in TRANSFER.items()
        for target, acc in zip(STYLES, row)
    }
    baselines = {target: _metrics(acc) for target, acc in zip(STYLES, BASELINE)}
    return transfer_gain_matrix(results, baselines, metric)


def test_evaluate_balanced_example():
    m = evaluate([P, P, N, N], [P, N, P, N], P)
    assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 1)
    assert m.accuracy == pytest.approx(0.5)
    assert m.f1 == pytest.approx(0.5)
    assert m.total == 4


def test_evaluate_perfect_and_inverted():
    assert evaluate([P, N], [P, N], P).accuracy == 1.0
    inverted = evaluate([N, P], [P, N], P)
    assert inverted.accuracy == 0.0
    assert inverted.f1 == 0.0


def test_missing_prediction_counts_as_wrong():
    m = evaluate([None, None], [P, N], P)
    assert (m.tp, m.fp, m.fn, m.tn) == (0, 1, 1, 0)
    assert m.accuracy == 0.0


def test_macro_f1_averages_both_classes():
    m = evaluate([P, P, P, N], [P, P, N, N], P, macro=True)
    # positive F1 = 0.8, negative F1 = 2/3
    assert m.f1 == pytest.approx((0.8 + 2 / 3) / 2)


def test_evaluate_rejects_bad_input():
    with pytest.raises(RejectedInputError):
        evaluate([P], [P, N], P)
    with pytest.raises(RejectedInputError):
        evaluate([], [], P)
    with pytest.raises(RejectedInputError):
        evaluate(["humorous"], [P], P, negative=N)


def test_confusion_counts_match_recount():
    rng = np.random.default_rng(0)
    labels = [P, N, None]
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        golds = [P if g else N for g in rng.integers(0, 2, size=n)]
        preds = [labels[k] for k in rng.integers(0, 3, size=n)]
        m = evaluate(preds, golds, P)
        tp = sum(1 for p, g in zip(preds, golds) if g == P and p == P)
        tn = sum(1 for p, g in zip(preds, golds) if g == N and p == N)
        fn = sum(1 for p, g in zip(preds, golds) if g == P and p != P)
        fp = sum(1 for p, g in zip(preds, golds) if g == N and p != N)
        assert (m.tp, m.tn, m.fn, m.fp) == (tp, tn, fn, fp)
        assert m.accuracy == pytest.approx((tp + tn) / n)
        expected_f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        assert m.f1 == pytest.approx(expected_f1)


def test_evaluate_ignores_joint_order():
    rng = np.random.default_rng(1)
    labels = [P, N, None]
    for _ in range(200):
        n = int(rng.integers(1, 25))
        golds = [P if g else N for g in rng.integers(0, 2, size=n)]
        preds = [labels[k] for k in rng.integers(0, 3, size=n)]
        order = rng.permutation(n)
        shuffled = evaluate([preds[i] for i in order], [golds[i] for i in order], P)
        assert shuffled == evaluate(preds, golds, P)


def test_metrics_row_formatting():
    m = Metrics(accuracy=0.8682, f1=0.81, tp=0, fp=0, tn=0, fn=0)
    assert m.to_row() == ("86.82", "0.81")
    assert render_report(m, "markdown") == "| Acc | F1 |\n|---|---|\n| 86.82 | 0.81 |\n"
    assert render_report(m, "csv") == "Acc,F1\n86.82,0.81\n"


def test_transfer_gains():
    matrix = _matrix()
    assert matrix.gain("sarcasm", "sarcasm") * 100 == pytest.approx(14.63)
    assert matrix.gain("sarcasm", "humor") * 100 == pytest.approx(9.55)
    assert matrix.gain("humor", "offense") * 100 == pytest.approx(8.54)
    assert matrix.baseline[StyleId.OFFENSE] == pytest.approx(0.4833)


def test_in_style_sft_wins_every_column():
    best = _matrix().argmax_per_column()
    assert best == {style: style for style in StyleId}


def test_transfer_matrix_rendering():
    text = render_report(_matrix(), "markdown")
    lines = text.strip().split("\n")
    assert lines[0] == "| Source \\ Target | sarcasm | humor | offense | metaphor |"
    assert lines[2] == "| sarcasm | +14.63 | +9.55 | +4.24 | +2.25 |"


def test_transfer_matrix_json_round_trip():
    matrix = _matrix("f1")
    restored = TransferGainMatrix.from_dict(json.loads(render_report(matrix, "json")))
    assert restored.metric == "f1"
    np.testing.assert_allclose(restored.gains, matrix.gains)


def test_transfer_matrix_ignores_key_order():
    results = {
        (source, target): _metrics(acc)
        for source, row in TRANSFER.items()
        for target, acc in zip(STYLES, row)
    }
    baselines = {target: _metrics(acc) for target, acc in zip(STYLES, BASELINE)}
    reordered = transfer_gain_matrix(
        dict(reversed(list(results.items()))),
        {StyleId(t): m for t, m in reversed(list(baselines.items()))},
    )
    matrix = _matrix()
    assert reordered.styles == matrix.styles
    np.testing.assert_array_equal(reordered.gains, matrix.gains)
    assert reordered.baseline == matrix.baseline


def test_transfer_matrix_requires_every_cell():
    baselines = {t: _metrics(0.5) for t in STYLES}
    with pytest.raises(RejectedInputError, match="missing cell"):
        transfer_gain_matrix({("sarcasm", "sarcasm"): _metrics(0.6)}, baselines)
    results = {(s, t): _metrics(0.6) for s in STYLES for t in STYLES}
    with pytest.raises(RejectedInputError, match="missing baseline"):
        transfer_gain_matrix(results, {"sarcasm": _metrics(0.5)})
    with pytest.raises(RejectedInputError):
        transfer_gain_matrix(results, baselines, metric="recall")


def _disagreement(n, a_correct):
    """n disagreeing binary predictions where A is right ``a_correct`` times."""
    golds = [P] * n
    preds_a = [P] * a_correct + [N] * (n - a_correct)
    preds_b = [N] * a_correct + [P] * (n - a_correct)
    # agreements are ignored
    return disagreement_report(preds_a + [P, N], preds_b + [P, N], golds + [P, P])


@pytest.mark.parametrize("n,a_correct,rate", [
    (529, 309, "58.4"),
    (30, 21, "70.0"),
    (244, 136, "55.7"),
    (561, 211, "37.6"),
])
def test_disagreement_win_rates(n, a_correct, rate):
    report = _disagreement(n, a_correct)
    assert report.n_disagreed == n
    assert report.a_correct == a_correct
    assert report.b_correct == n - a_correct
    assert report.win_rate_percent() == rate


def test_no_disagreement():
    report = disagreement_report([P, N], [P, N], [P, P])
    assert report == DisagreementReport(n_disagreed=0, a_correct=0, b_correct=0, a_win_rate=0.0)


def test_disagreement_rendering():
    text = render_report(_disagreement(30, 21), "csv")
    assert text == "Disagreed,A Correct,B Correct,Win Rate (%)\n30,21,9,70.0\n"


def test_result_table():
    table = compare_setups({
        "GRPO-only": {"sarcasm": _metrics(0.7219, 0.70), "humor": _metrics(0.6585, 0.60)},
        "SFT-CoT then GRPO": {"sarcasm": _metrics(0.8682, 0.81), "humor": _metrics(0.7891, 0.75)},
    })
    assert table.styles() == [StyleId.SARCASM, StyleId.HUMOR]
    assert table.column_best("accuracy") == {
        StyleId.SARCASM: "SFT-CoT then GRPO",
        StyleId.HUMOR: "SFT-CoT then GRPO",
    }
    lines = render_report(table, "markdown").strip().split("\n")
    assert lines[0] == "| Setup | sarcasm Acc | sarcasm F1 | humor Acc | humor F1 |"
    assert lines[3] == "| SFT-CoT then GRPO | 86.82 | 0.81 | 78.91 | 0.75 |"
    assert ResultTable.from_dict(table.to_dict()).rows == table.rows


def test_result_table_marks_missing_cells():
    table = compare_setups({"a": {"sarcasm": _metrics(0.5)}, "b": {"humor": _metrics(0.5)}})
    lines = render_report(table, "markdown").strip().split("\n")
    assert lines[2] == "| a | 50.00 | 0.50 | - | - |"


def test_render_rejects_unknown_format():
    with pytest.raises(RejectedInputError):
        render_report(_metrics(0.5), "html")


def test_emit_report_to_stream_and_path(tmp_path):
    m = _metrics(0.5)
    stream = io.StringIO()
    emit_report(m, stream, "json")
    assert json.loads(stream.getvalue())["accuracy"] == 0.5
    path = tmp_path / "out" / "metrics.md"
    emit_report(m, path)
    assert path.read_text(encoding="utf-8") == render_report(m, "markdown")
