"""Tests for style definitions and prompt templates."""

import re

import pytest

from figrlvr.errors import RejectedInputError
from figrlvr.styles import (
    StyleId,
    TemplateKind,
    binary_completion,
    compose_prompt,
    cot_completion,
    get_style,
    get_template_kind,
    list_styles,
    render_prompt,
)


def test_styles_are_listed_in_fixed_order():
    assert [s.id for s in list_styles()] == [
        StyleId.SARCASM,
        StyleId.HUMOR,
        StyleId.OFFENSE,
        StyleId.METAPHOR,
    ]


@pytest.mark.parametrize(
    "style,positive,negative",
    [
        ("sarcasm", "sarcastic", "not sarcastic"),
        ("humor", "humorous", "not humorous"),
        ("offense", "offensive", "not offensive"),
        ("metaphor", "metaphorical", "not metaphorical"),
    ],
)
def test_label_vocabulary(style, positive, negative):
    resolved = get_style(style)
    assert resolved.labels == (positive, negative)
    assert resolved.opposite(positive) == negative
    assert resolved.opposite(negative) == positive


def test_get_style_is_case_insensitive():
    assert get_style(" Sarcasm ").id is StyleId.SARCASM
    assert get_style(StyleId.HUMOR).id is StyleId.HUMOR


def test_unknown_style_rejected():
    with pytest.raises(RejectedInputError, match="Unknown style 'irony'"):
        render_prompt("irony", TemplateKind.TEACHER_COT)


def test_unknown_kind_rejected():
    with pytest.raises(RejectedInputError):
        render_prompt("sarcasm", "free_form")


@pytest.mark.parametrize("alias,kind", [
    ("teacher", TemplateKind.TEACHER_COT),
    ("cot", TemplateKind.TEACHER_COT),
    ("rlvr", TemplateKind.RLVR_TAGGED),
    ("tagged", TemplateKind.RLVR_TAGGED),
])
def test_kind_aliases(alias, kind):
    assert get_template_kind(alias) is kind


def test_sarcasm_teacher_template_names_mismatch_step():
    text = render_prompt("sarcasm", "teacher_cot")
    assert "Step 3: Detecting mismatch" in text
    assert "Step 4: Inference of intent" in text
    assert text.endswith(
        "Step 5: [Provide your final answer in the form of 'sarcastic' or 'not sarcastic']"
    )


def test_metaphor_teacher_template_names_cue_step():
    text = render_prompt("metaphor", "teacher_cot")
    assert "Step 3: Metaphor cues" in text
    assert "Step 4: Interpretation" in text
    assert '"metaphorical" or "not metaphorical"' in text


@pytest.mark.parametrize("style", [s.id for s in list_styles()])
def test_teacher_template_has_five_markers_in_order(style):
    text = render_prompt(style, "teacher_cot")
    found = [int(k) for k in re.findall(r"^Step (\d):", text, flags=re.MULTILINE)]
    assert found == [1, 2, 3, 4, 5]


@pytest.mark.parametrize("style", [s.id for s in list_styles()])
def test_rlvr_template_has_steps_and_tag_instruction(style):
    resolved = get_style(style)
    text = render_prompt(style, "rlvr_tagged")
    positions = [text.index(f"Step {k}:") for k in range(1, 5)]
    assert positions == sorted(positions)
    assert "Step 5:" not in text
    assert "<think>" in text and "</answer>" in text
    assert f"<answer> {resolved.positive_label}/{resolved.negative_label} </answer>" in text


def test_sarcasm_rlvr_template_ends_with_tag_example():
    text = render_prompt("sarcasm", "rlvr")
    assert text.endswith(
        "<think> reasoning process (Step 1 to Step 4) </think>"
        "<answer> sarcastic/not sarcastic </answer>"
    )


@pytest.mark.parametrize("style", [s.id for s in list_styles()])
@pytest.mark.parametrize("kind", list(TemplateKind))
def test_both_labels_appear_in_every_template(style, kind):
    resolved = get_style(style)
    text = render_prompt(style, kind)
    assert resolved.positive_label in text
    assert resolved.negative_label in text


def test_render_prompt_is_stable():
    assert render_prompt("humor", "rlvr") == render_prompt(StyleId.HUMOR, TemplateKind.RLVR_TAGGED)


def test_compose_prompt_appends_caption():
    text = compose_prompt("offense", "teacher", "stop doing this to your pics")
    assert text.startswith(render_prompt("offense", "teacher"))
    assert text.endswith("\n\nCaption: stop doing this to your pics")


def test_binary_completion_is_bare_label():
    assert binary_completion("sarcasm", "not sarcastic") == "not sarcastic"
    with pytest.raises(RejectedInputError):
        binary_completion("sarcasm", "humorous")


def test_cot_completion_wraps_first_four_steps():
    steps = ["image", "caption", "mismatch", "intent", "Sarcastic."]
    completion = cot_completion("sarcasm", steps, "sarcastic")
    assert completion == (
        "<think>Step 1: image\nStep 2: caption\nStep 3: mismatch\nStep 4: intent</think>"
        "<answer>sarcastic</answer>"
    )


def test_cot_completion_needs_four_steps():
    with pytest.raises(RejectedInputError):
        cot_completion("sarcasm", ["a", "b", "c"], "sarcastic")
