"""Shared fixtures: example teacher traces, small sample sets and run configs."""

from pathlib import Path

import pytest

from figrlvr.config import Config, RunConfig
from figrlvr.dataset_io import Sample, Split
from figrlvr.styles import StyleId

SARCASM_TRACE = """Step 1: The image shows a map of Malaysia with a green area in the center, which appears to be a lake or a body of water. The map also shows the surrounding landmasses and the coastline.
Step 2: The caption reads, “this is how our currency is shrinking #ringgitladesh.” It refers to the Malaysian currency (Ringgit) and implies that it is losing value.
Step 3: There is a mismatch between the image and the caption. The image shows a map unrelated to currency, while the caption refers to economic value.
Step 4: The mismatch suggests the post is sarcastic, using irony rather than serious commentary to highlight the shrinking value of the currency.
Step 5: Sarcastic."""

HUMOR_TRACE = """Step 1: The image depicts a man walking down the street with a woman on his arm while looking back at another woman. The man wears a blue plaid shirt; the woman on his arm is in a light blue top; the woman he looks at wears a red dress.
Step 2: The caption reads “People of the future” above the man’s head, “Traditional human language” above the woman on his arm, and “Communicating entirely through the Distracted Boyfriend meme” above the woman he is looking at.
Step 3: The humor arises from applying the well-known Distracted Boyfriend meme to a futuristic scenario where people communicate only through memes. The absurd combination creates incongruity and amusement.
Step 4: The intent is to be humorous by exaggerating modern meme culture.
Step 5: Humorous."""

OFFENSE_TRACE = """Step 1: The image shows two side-by-side photos of a man with a shaved head, wearing a tuxedo. The left photo looks natural; the right has exaggerated, cartoonish features.
Step 2: “Stop doing this to your pics.”
Step 3: The image has no hate speech, slurs, or derogatory content. The tone is slightly sarcastic, criticizing excessive photo editing.
Step 4: The context is lighthearted social media humor, not malicious or harmful.
Step 5: Not offensive."""

METAPHOR_TRACE = """Step 1: Two children stand behind a table with a red chair built from objects such as a bucket, a drum, and a book. The background has a bookshelf filled with books.
Step 2:“HONDA – The Power of Dreams.”
Step 3: The creative chair symbolizes imagination and innovation. The children’s presence implies creativity is accessible to everyone.
Step 4: The metaphor expresses that creativity and imagination can lead to achieving dreams, encouraging viewers to think outside the box.
Step 5: Metaphorical."""

# (style, trace, expected final label)
EXAMPLE_TRACES = [
    (StyleId.SARCASM, SARCASM_TRACE, "sarcastic"),
    (StyleId.HUMOR, HUMOR_TRACE, "humorous"),
    (StyleId.OFFENSE, OFFENSE_TRACE, "not offensive"),
    (StyleId.METAPHOR, METAPHOR_TRACE, "metaphorical"),
]


def make_sample(
    sample_id: str = "s-1",
    style: StyleId | str = StyleId.SARCASM,
    gold_label: str = "sarcastic",
    split: Split | None = None,
    caption: str = "what a lovely day",
    meta: dict | None = None,
) -> Sample:
    return Sample(
        id=sample_id,
        style=style,
        caption=caption,
        image_ref=f"images/{sample_id}.jpg",
        gold_label=gold_label,
        split=split,
        meta=meta or {},
    )


@pytest.fixture
def example_traces():
    return list(EXAMPLE_TRACES)


@pytest.fixture
def sarcasm_sample():
    return make_sample()


def synthetic_run_config(
    output_dir: Path,
    stages: list[str],
    n: int = 200,
    styles: tuple[str, ...] = ("sarcasm",),
    **sections,
) -> RunConfig:
    """RunConfig for a small mock-gateway run on synthetic data."""
    data = {
        "paths": {"output_dir": str(output_dir)},
        "settings": {"logging": {"level": "WARNING"}},
        "run": {"stages": stages, "styles": list(styles), "seed": 0},
        "synthetic": {"n": n, "seed": 0, "styles": list(styles)},
        "split": {"policy": "seeded_80_20", "seed": 0},
        "gateway": {"endpoint": "mock", "max_in_flight": 2},
        "sft": {"target": "cot", "epochs": 10, "learning_rate": 0.5, "batch_size": 16},
        "grpo": {"init": "sft", "learning_rate": 0.001, "epochs": 1},
    }
    for key, value in sections.items():
        data[key] = {**data.get(key, {}), **value}
    return RunConfig.from_config(Config.from_dict(data, output_dir.parent))
