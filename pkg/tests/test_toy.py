"""Tests for the toy incongruity task and the softmax policies."""

import numpy as np
import pytest

from figrlvr.errors import RejectedInputError
from figrlvr.rewards import total_reward
from figrlvr.styles import StyleId
from figrlvr.toy import (
    ACTIONS,
    NUM_FEATURES,
    ReferencePolicy,
    ToyPolicy,
    ToyTask,
    action_for_completion,
    action_index,
    base_policy,
    encode_context,
    greedy_accuracy,
    greedy_labels,
    is_incongruent,
    make_toy_task,
    split_toy_task,
)

from conftest import make_sample


def test_task_is_balanced():
    task = make_toy_task(seed=1, n=200)
    assert len(task) == 200
    assert abs(int(task.gold_positive.sum()) - 100) <= 1
    assert task.features.shape == (200, NUM_FEATURES)


def test_task_is_deterministic_per_seed():
    a = make_toy_task(seed=3, n=50)
    b = make_toy_task(seed=3, n=50)
    c = make_toy_task(seed=4, n=50)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.gold_positive, b.gold_positive)
    assert not np.array_equal(a.features, c.features)


def test_gold_label_is_sentiment_incongruity():
    task = make_toy_task(seed=7, n=300)
    image_positive = task.features[:, 1] == 1.0
    caption_positive = task.features[:, 3] == 1.0
    expected = [is_incongruent(i, c) for i, c in zip(image_positive, caption_positive)]
    np.testing.assert_array_equal(task.gold_positive, expected)


def test_encode_context_layout():
    x = encode_context(True, False, (1, 0, 0, 1))
    assert x[0] == 1.0
    assert x[1] == 1.0 and x[2] == 0.0
    assert x[3] == 0.0 and x[4] == 1.0
    # pair one-hot: (image +, caption -) is "pn"
    assert list(x[5:9]) == [0.0, 1.0, 0.0, 0.0]
    assert list(x[9:]) == [1.0, 0.0, 0.0, 1.0]


def test_encode_context_rejects_wrong_distractors():
    with pytest.raises(RejectedInputError):
        encode_context(True, True, (0, 1))


def test_actions_render_to_scored_text():
    gold = "sarcastic"
    totals = [total_reward(a.render(StyleId.SARCASM), gold, StyleId.SARCASM).total for a in ACTIONS]
    assert totals == [2, 1, 1, 0]


def test_action_for_completion():
    assert action_for_completion("<think>x</think><answer>sarcastic</answer>", "sarcasm") == 0
    assert action_for_completion("not sarcastic", "sarcasm") == action_index(False, False)
    with pytest.raises(RejectedInputError):
        action_for_completion("no label here", "sarcasm")


def test_split_toy_task():
    task = make_toy_task(seed=0, n=10)
    train, test = split_toy_task(task, 0.8)
    assert (len(train), len(test)) == (8, 2)
    assert train.ids + test.ids == task.ids


def test_task_from_samples():
    samples = [
        make_sample("a", gold_label="sarcastic",
                    meta={"image_sentiment": "positive", "caption_sentiment": "negative"}),
        make_sample("b", gold_label="not sarcastic",
                    meta={"image_sentiment": "negative", "caption_sentiment": "negative"}),
    ]
    task = ToyTask.from_samples(samples)
    assert task.ids == ("a", "b")
    assert list(task.gold_positive) == [True, False]
    assert task.gold_label(1) == "not sarcastic"


def test_task_from_samples_needs_features():
    with pytest.raises(RejectedInputError):
        ToyTask.from_samples([make_sample("a")])


def test_base_policy_prefers_bare_negative_answer():
    task = make_toy_task(seed=0, n=100)
    policy = base_policy(seed=0)
    assert set(policy.greedy_actions(task.features)) == {action_index(False, False)}
    assert greedy_accuracy(policy, task) == pytest.approx(0.5)
    assert set(greedy_labels(policy, task)) == {"not sarcastic"}


def test_probabilities_sum_to_one():
    policy = base_policy(seed=2)
    task = make_toy_task(seed=2, n=20)
    probs = policy.probabilities(task.features)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    np.testing.assert_allclose(np.exp(policy.log_probabilities(task.features)), probs)


def test_reference_policy_is_frozen():
    policy = base_policy(seed=0)
    ref = policy.freeze()
    assert isinstance(ref, ReferencePolicy)
    with pytest.raises(AttributeError):
        ref.weights = np.zeros_like(ref.weights)
    with pytest.raises(ValueError):
        ref.weights[0, 0] = 5.0
    policy.weights = policy.weights + 1.0
    assert not np.array_equal(policy.weights, ref.weights)


def test_policy_save_load(tmp_path):
    policy = base_policy(seed=5)
    path = policy.save(tmp_path / "policies" / "p.npy")
    loaded = ToyPolicy.load(path)
    np.testing.assert_array_equal(loaded.weights, policy.weights)


def test_policy_rejects_bad_shape():
    with pytest.raises(RejectedInputError):
        ToyPolicy(np.zeros((NUM_FEATURES, 3)))
