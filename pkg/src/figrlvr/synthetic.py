"""Synthetic image-caption samples and scripted teacher/student outputs.

Samples carry the toy features in ``meta`` so pipeline stages can turn them into
toy contexts. Scripts map prompt fingerprints to canned completions for the
mock gateway; a seeded fraction of teacher traces is corrupted so filtering has
both outcomes to handle.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from .dataset_io import Sample
from .gateway import prompt_fingerprint
from .styles import StyleId, TemplateKind, compose_prompt, get_style
from .toy import is_incongruent, sample_sentiments

logger = logging.getLogger(__name__)

_SCENES = {True: "a sunny beach with smiling people", False: "a flooded street under grey skies"}
_CAPTIONS = {True: "what a wonderful day", False: "what a miserable day"}


def _sentiment(flag: bool) -> str:
    return "positive" if flag else "negative"


def make_synthetic_samples(
    n: int,
    seed: int = 0,
    styles: Sequence[StyleId | str] = (StyleId.SARCASM,),
) -> list[Sample]:
    """``n`` samples per style, labeled by the incongruity rule."""
    resolved = [get_style(s) for s in styles]
    samples: list[Sample] = []
    for offset, style in enumerate(resolved):
        image, caption, distractors = sample_sentiments(seed + offset, n)
        for i in range(n):
            incongruent = is_incongruent(image[i], caption[i])
            samples.append(
                Sample(
                    id=f"syn-{style.id.value}-{i:05d}",
                    style=style.id,
                    caption=f"{_CAPTIONS[bool(caption[i])]} #{i}",
                    image_ref=f"synthetic/{style.id.value}/{i:05d}.png",
                    gold_label=style.positive_label if incongruent else style.negative_label,
                    meta={
                        "image_sentiment": _sentiment(bool(image[i])),
                        "caption_sentiment": _sentiment(bool(caption[i])),
                        "distractors": [int(d) for d in distractors[i]],
                    },
                )
            )
    logger.info(f"Generated {len(samples)} synthetic samples for {[s.id.value for s in resolved]}")
    return samples


def synthetic_trace(sample: Sample, label: str, drop_step: int | None = None) -> str:
    """Five-step teacher trace for a synthetic sample, ending in ``label``."""
    style = get_style(sample.style)
    image_positive = sample.meta.get("image_sentiment") == "positive"
    congruent = sample.meta.get("image_sentiment") == sample.meta.get("caption_sentiment")
    comparison = (
        "The image and the caption agree in tone, so there is no mismatch."
        if congruent
        else "There is a mismatch between the image and the caption."
    )
    steps = [
        f"The image shows {_SCENES[image_positive]}.",
        f"The caption reads, “{sample.caption}.”",
        f"{style.step3_name}: {comparison}",
        f"{style.step4_name}: the pairing suggests the post is {label}.",
        f"{label.capitalize()}.",
    ]
    lines = [f"Step {k}: {body}" for k, body in enumerate(steps, start=1) if k != drop_step]
    return "\n".join(lines)


def mock_teacher_script(
    samples: Sequence[Sample],
    wrong_rate: float = 0.1,
    drop_rate: float = 0.05,
    seed: int = 0,
) -> dict[str, str]:
    """Fingerprint-keyed teacher traces for the teacher CoT prompt of each sample."""
    rng = np.random.default_rng(seed)
    script: dict[str, str] = {}
    for sample in samples:
        style = get_style(sample.style)
        roll = rng.random()
        label = sample.gold_label
        drop_step = None
        if roll < drop_rate:
            drop_step = int(rng.integers(1, 5))
        elif roll < drop_rate + wrong_rate:
            label = style.opposite(sample.gold_label)
        prompt = compose_prompt(style, TemplateKind.TEACHER_COT, sample.caption)
        script[prompt_fingerprint(prompt)] = synthetic_trace(sample, label, drop_step)
    return script


def mock_student_script(
    samples: Sequence[Sample],
    accuracy: float = 0.8,
    malformed_rate: float = 0.1,
    seed: int = 0,
) -> dict[str, str]:
    """Fingerprint-keyed tagged outputs for the RLVR prompt of each sample."""
    rng = np.random.default_rng(seed)
    script: dict[str, str] = {}
    for sample in samples:
        style = get_style(sample.style)
        label = sample.gold_label if rng.random() < accuracy else style.opposite(sample.gold_label)
        reasoning = synthetic_trace(sample, label).rsplit("\n", 1)[0]
        if rng.random() < malformed_rate:
            text = f"{reasoning}\nAnswer: {label}"
        else:
            text = f"<think>{reasoning}</think><answer>{label}</answer>"
        prompt = compose_prompt(style, TemplateKind.RLVR_TAGGED, sample.caption)
        script[prompt_fingerprint(prompt)] = text
    return script

