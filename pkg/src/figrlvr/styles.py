"""Figurative styles, their label vocabularies and prompt templates.

Each style owns a closed binary label pair and two prompt templates:

    teacher_cot   five-step reasoning prompt sent to the teacher model
    rlvr_tagged   Steps 1-4 inline plus the <think>/<answer> tag instruction

Templates are static text. ``render_prompt`` returns the stored text unchanged;
``compose_prompt`` appends a sample's caption for an actual request.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .errors import RejectedInputError

logger = logging.getLogger(__name__)


class StyleId(str, Enum):
    SARCASM = "sarcasm"
    HUMOR = "humor"
    OFFENSE = "offense"
    METAPHOR = "metaphor"


class TemplateKind(str, Enum):
    TEACHER_COT = "teacher_cot"
    RLVR_TAGGED = "rlvr_tagged"


# Short names accepted on the command line
_KIND_ALIASES: dict[str, TemplateKind] = {
    "teacher": TemplateKind.TEACHER_COT,
    "teacher_cot": TemplateKind.TEACHER_COT,
    "cot": TemplateKind.TEACHER_COT,
    "rlvr": TemplateKind.RLVR_TAGGED,
    "rlvr_tagged": TemplateKind.RLVR_TAGGED,
    "tagged": TemplateKind.RLVR_TAGGED,
}


@dataclass(frozen=True)
class FigurativeStyle:
    """One figurative style with its closed label vocabulary.

    Attributes:
        id: Style identifier.
        positive_label: The figurative label (e.g. "sarcastic").
        negative_label: The literal label (e.g. "not sarcastic").
        step3_name: Name of the style-specific cue step.
        step4_name: Name of the intent/interpretation step.
        subject: What the expert detects, as phrased in the prompt intro.
        step3_hint: Bracketed instruction for Step 3.
        step4_hint: Bracketed instruction for Step 4.
    """
    id: StyleId
    positive_label: str
    negative_label: str
    step3_name: str
    step4_name: str
    subject: str
    step3_hint: str
    step4_hint: str

    @property
    def labels(self) -> tuple[str, str]:
        return (self.positive_label, self.negative_label)

    def is_label(self, value: str) -> bool:
        return value in self.labels

    def opposite(self, label: str) -> str:
        if label == self.positive_label:
            return self.negative_label
        if label == self.negative_label:
            return self.positive_label
        raise RejectedInputError(f"'{label}' is not a {self.id.value} label")


@dataclass(frozen=True)
class PromptTemplate:
    style: FigurativeStyle
    kind: TemplateKind
    text: str


STEP1_NAME = "What the image shows"
STEP1_HINT = "Detailed description of the image content"
STEP2_NAME = "What the caption says"
STEP2_HINT = "Quote or paraphrase the caption"

_STYLES: tuple[FigurativeStyle, ...] = (
    FigurativeStyle(
        id=StyleId.SARCASM,
        positive_label="sarcastic",
        negative_label="not sarcastic",
        step3_name="Detecting mismatch",
        step4_name="Inference of intent",
        subject="sarcasm",
        step3_hint=(
            "Explain if there is a mismatch or congruence between the image and "
            "caption, and why"
        ),
        step4_hint=(
            "Conclude whether the intent is sarcastic or not based on the "
            "mismatch/congruence"
        ),
    ),
    FigurativeStyle(
        id=StyleId.HUMOR,
        positive_label="humorous",
        negative_label="not humorous",
        step3_name="Humor cues",
        step4_name="Inference of intent",
        subject="humor",
        step3_hint=(
            "Explain if there are elements such as exaggeration, wordplay, absurdity, "
            "or incongruity between the image and caption that make the content humorous"
        ),
        step4_hint="Conclude whether the intent is humorous or not based on the cues",
    ),
    FigurativeStyle(
        id=StyleId.OFFENSE,
        positive_label="offensive",
        negative_label="not offensive",
        step3_name="Offense cues",
        step4_name="Context and intent",
        subject="offensive content",
        step3_hint=(
            "Explain if there are elements such as hate speech, slurs, derogatory "
            "language, demeaning stereotypes, harassment, or explicit insults that "
            "make the content offensive"
        ),
        step4_hint=(
            "Discuss whether the content was likely meant to harm, insult, or demean "
            "someone, or if it might be interpreted as offensive even without harmful intent"
        ),
    ),
    FigurativeStyle(
        id=StyleId.METAPHOR,
        positive_label="metaphorical",
        negative_label="not metaphorical",
        step3_name="Metaphor cues",
        step4_name="Interpretation",
        subject="metaphors",
        step3_hint=(
            "Explain if there are figurative expressions, symbolic comparisons, or "
            "non-literal meanings that connect the caption and the image"
        ),
        step4_hint=(
            "Discuss what abstract idea, concept, or meaning the metaphor might be conveying"
        ),
    ),
)

_BY_ID: dict[StyleId, FigurativeStyle] = {s.id: s for s in _STYLES}


def _steps(style: FigurativeStyle) -> list[tuple[str, str]]:
    return [
        (STEP1_NAME, STEP1_HINT),
        (STEP2_NAME, STEP2_HINT),
        (style.step3_name, style.step3_hint),
        (style.step4_name, style.step4_hint),
    ]


def _teacher_intro(style: FigurativeStyle) -> str:
    pos, neg = style.labels
    if style.id is StyleId.SARCASM:
        return (
            "You are an expert at detecting sarcasm in images and text. Analyze the "
            f"provided image and caption to determine if the pair is {pos} or {neg}. "
            "Provide your reasoning in the following format:"
        )
    return _rlvr_intro(style)


def _rlvr_intro(style: FigurativeStyle) -> str:
    if style.id is StyleId.METAPHOR:
        verdict = "uses metaphorical language or not"
    else:
        verdict = f"is {style.positive_label} or not"
    return (
        f"You are an expert at detecting {style.subject} in images and text. "
        f"When given an image and text, analyze whether the content {verdict}. "
        "Provide your reasoning process in the following format:"
    )


def _teacher_text(style: FigurativeStyle) -> str:
    pos, neg = style.labels
    quote = "'" if style.id is StyleId.SARCASM else '"'
    lines = [_teacher_intro(style), ""]
    for k, (name, hint) in enumerate(_steps(style), start=1):
        lines.append(f"Step {k}: {name}: [{hint}]")
    lines.append(
        f"Step 5: [Provide your final answer in the form of "
        f"{quote}{pos}{quote} or {quote}{neg}{quote}]"
    )
    return "\n".join(lines)


def _rlvr_text(style: FigurativeStyle) -> str:
    pos, neg = style.labels
    steps = " ".join(
        f"Step {k}: {name}: [{hint}]." for k, (name, hint) in enumerate(_steps(style), start=1)
    )
    return (
        f"{_rlvr_intro(style)} {steps}\n"
        "Your reasoning process and answer should be enclosed within <think> </think> "
        "and <answer> </answer> tags, respectively. "
        f"Answer with either {pos} or {neg} in the answer tags, i.e.,"
        f"<think> reasoning process (Step 1 to Step 4) </think><answer> {pos}/{neg} </answer>"
    )


_TEMPLATES: dict[tuple[StyleId, TemplateKind], str] = {}
for _style in _STYLES:
    _TEMPLATES[(_style.id, TemplateKind.TEACHER_COT)] = _teacher_text(_style)
    _TEMPLATES[(_style.id, TemplateKind.RLVR_TAGGED)] = _rlvr_text(_style)


def list_styles() -> list[FigurativeStyle]:
    """Return the four styles in fixed order: sarcasm, humor, offense, metaphor."""
    return list(_STYLES)


def get_style(style: str | StyleId | FigurativeStyle) -> FigurativeStyle:
    """Look up a style by id (case-insensitive) or pass a style through."""
    if isinstance(style, FigurativeStyle):
        if _BY_ID.get(style.id) != style:
            raise RejectedInputError(f"Unknown style definition: {style.id!r}")
        return style
    try:
        return _BY_ID[StyleId(str(getattr(style, "value", style)).strip().lower())]
    except ValueError:
        valid = ", ".join(s.id.value for s in _STYLES)
        raise RejectedInputError(f"Unknown style '{style}'. Valid styles: {valid}") from None


def get_template_kind(kind: str | TemplateKind) -> TemplateKind:
    if isinstance(kind, TemplateKind):
        return kind
    resolved = _KIND_ALIASES.get(str(kind).strip().lower())
    if resolved is None:
        valid = ", ".join(sorted(_KIND_ALIASES))
        raise RejectedInputError(f"Unknown template kind '{kind}'. Valid kinds: {valid}")
    return resolved


def get_template(style: str | StyleId | FigurativeStyle, kind: str | TemplateKind) -> PromptTemplate:
    resolved_style = get_style(style)
    resolved_kind = get_template_kind(kind)
    return PromptTemplate(
        style=resolved_style,
        kind=resolved_kind,
        text=_TEMPLATES[(resolved_style.id, resolved_kind)],
    )


def render_prompt(style: str | StyleId | FigurativeStyle, kind: str | TemplateKind) -> str:
    """Return the stored template text for a style and template kind.

    Raises:
        RejectedInputError: If the style or kind is unknown.
    """
    return get_template(style, kind).text


def compose_prompt(
    style: str | StyleId | FigurativeStyle,
    kind: str | TemplateKind,
    caption: str,
) -> str:
    """Template text followed by the sample's caption, as sent to a model."""
    return f"{render_prompt(style, kind)}\n\nCaption: {caption}"


def binary_completion(style: str | StyleId | FigurativeStyle, label: str) -> str:
    """SFT-Binary target: the bare gold label."""
    resolved = get_style(style)
    if not resolved.is_label(label):
        raise RejectedInputError(f"'{label}' is not a {resolved.id.value} label")
    return label


def cot_completion(
    style: str | StyleId | FigurativeStyle,
    steps: list[str] | tuple[str, ...],
    label: str,
) -> str:
    """SFT-CoT target: Steps 1-4 inside <think>, the label inside <answer>."""
    resolved = get_style(style)
    if not resolved.is_label(label):
        raise RejectedInputError(f"'{label}' is not a {resolved.id.value} label")
    if len(steps) < 4:
        raise RejectedInputError(f"Expected at least 4 reasoning steps, got {len(steps)}")
    reasoning = "\n".join(f"Step {k}: {body}" for k, body in enumerate(steps[:4], start=1))
    return f"<think>{reasoning}</think><answer>{label}</answer>"
