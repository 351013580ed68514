"""Tests for the verifiable reward: accuracy plus format."""

import pytest

from figrlvr.errors import TraceParseError
from figrlvr.rewards import (
    RewardBreakdown,
    accuracy_reward,
    format_reward,
    predict_label,
    score_batch,
    total_reward,
)

THINK = "<think>Step 1: a map. Step 2: currency. Step 3: mismatch. Step 4: irony.</think>"

# (raw output, gold, style, r_acc, r_format)
CASES = [
    (f"{THINK}<answer>sarcastic</answer>", "sarcastic", "sarcasm", 1, 1),
    (f"{THINK}<answer> Sarcastic </answer>", "sarcastic", "sarcasm", 1, 1),
    (f"{THINK}<answer>not sarcastic</answer>", "sarcastic", "sarcasm", 0, 1),
    (f"{THINK}<answer>NOT  SARCASTIC</answer>", "not sarcastic", "sarcasm", 1, 1),
    (f"{THINK}<answer>maybe</answer>", "sarcastic", "sarcasm", 0, 1),
    (f"{THINK}<answer>sarcastic.</answer>", "sarcastic", "sarcasm", 0, 1),
    (f"{THINK}<answer>humorous</answer>", "sarcastic", "sarcasm", 0, 1),
    (f"  {THINK}\n<answer>sarcastic</answer>\n", "sarcastic", "sarcasm", 1, 1),
    ("Answer: sarcastic", "sarcastic", "sarcasm", 1, 0),
    ("Answer: not sarcastic", "sarcastic", "sarcasm", 0, 0),
    ("The post is not sarcastic.", "not sarcastic", "sarcasm", 1, 0),
    ("I cannot tell.", "sarcastic", "sarcasm", 0, 0),
    ("", "not sarcastic", "sarcasm", 0, 0),
    (f"{THINK}<answer>sarcastic</answer> trailing", "sarcastic", "sarcasm", 1, 0),
    (f"<answer>sarcastic</answer>{THINK}", "sarcastic", "sarcasm", 1, 0),
    (f"{THINK}{THINK}<answer>sarcastic</answer>", "sarcastic", "sarcasm", 1, 0),
    ("<think>reasoning</think>", "not sarcastic", "sarcasm", 0, 0),
    ("<think>x</think><answer>humorous</answer>", "humorous", "humor", 1, 1),
    ("<think>x</think><answer>not humorous</answer>", "humorous", "humor", 0, 1),
    ("<think>x</think><answer>not offensive</answer>", "not offensive", "offense", 1, 1),
    ("Offensive, clearly.", "offensive", "offense", 1, 0),
    ("<think>x</think><answer>metaphorical</answer>", "not metaphorical", "metaphor", 0, 1),
    ("<think>x</think><answer>Not Metaphorical</answer>", "not metaphorical", "metaphor", 1, 1),
    ("not metaphorical <answer>", "not metaphorical", "metaphor", 1, 0),
]


@pytest.mark.parametrize("raw,gold,style,r_acc,r_format", CASES)
def test_total_reward_breakdown(raw, gold, style, r_acc, r_format):
    result = total_reward(raw, gold, style)
    assert (result.r_acc, result.r_format) == (r_acc, r_format)
    assert result.total == r_acc + r_format
    assert result.total in (0, 1, 2)


@pytest.mark.parametrize("raw,gold,style,r_acc,r_format", CASES)
def test_strict_accuracy_requires_format(raw, gold, style, r_acc, r_format):
    result = total_reward(raw, gold, style, strict_acc=True)
    assert result.r_format == r_format
    assert result.r_acc == (r_acc if r_format else 0)


def test_predicted_label_reported():
    result = total_reward(f"{THINK}<answer> Not Sarcastic</answer>", "sarcastic", "sarcasm")
    assert result.predicted_label == "not sarcastic"
    assert result.to_dict() == {
        "r_acc": 0,
        "r_format": 1,
        "total": 1,
        "predicted_label": "not sarcastic",
    }


def test_unparseable_answer_has_no_prediction():
    assert predict_label(f"{THINK}<answer>unsure</answer>", "sarcasm") == (None, 1)


def test_invalid_gold_label_rejected():
    with pytest.raises(TraceParseError):
        total_reward(f"{THINK}<answer>sarcastic</answer>", "humorous", "sarcasm")


def test_accuracy_reward():
    assert accuracy_reward(None, "sarcastic") == 0
    assert accuracy_reward(" Sarcastic", "sarcastic") == 1
    assert accuracy_reward("not sarcastic", "sarcastic") == 0


def test_format_reward():
    assert format_reward("<think></think><answer></answer>") == 1
    assert format_reward("<think>x</think>") == 0


def test_reward_is_deterministic():
    raw = f"{THINK}<answer>sarcastic</answer>"
    assert total_reward(raw, "sarcastic", "sarcasm") == total_reward(raw, "sarcastic", "sarcasm")


def test_score_batch_keeps_order():
    items = [(raw, gold, style) for raw, gold, style, _, _ in CASES]
    serial = score_batch(items)
    threaded = score_batch(items, max_workers=4)
    assert serial == threaded
    assert [(r.r_acc, r.r_format) for r in serial] == [(a, f) for _, _, _, a, f in CASES]
    assert all(isinstance(r, RewardBreakdown) for r in serial)


BARE = [(raw, gold, style) for raw, gold, style, _, r_format in CASES if not r_format and raw and "<" not in raw]


@pytest.mark.parametrize("raw,gold,style", BARE)
def test_wrapping_bare_answer_never_lowers_reward(raw, gold, style):
    wrapped = f"{THINK}<answer>{raw}</answer>"
    repaired = total_reward(wrapped, gold, style)
    assert repaired.r_format == 1
    assert repaired.total >= total_reward(raw, gold, style).total
