"""End-to-end pipeline runs on synthetic data behind the mock gateway."""

import json

import pytest

from figrlvr.dataset_io import read_corpus, read_sft_records
from figrlvr.errors import ConfigValidationError, StageError
from figrlvr.manifest import RunManifest, file_digest
from figrlvr.pipeline import STAGES, run, validate

from conftest import synthetic_run_config

FULL = ["ingest", "split", "distill", "filter", "export_sft", "sft", "grpo", "eval", "analyze"]
ALL_STYLES = ("sarcasm", "humor", "offense", "metaphor")


def _outputs(manifest: RunManifest) -> dict[str, str]:
    return {name: digest for record in manifest.stages.values() for name, digest in record.outputs.items()}


def test_budget_must_divide_across_styles(tmp_path):
    ok = synthetic_run_config(tmp_path / "a", ["ingest", "split"], styles=ALL_STYLES, budget={"total": 5000})
    assert validate(ok) == []
    bad = synthetic_run_config(tmp_path / "b", ["ingest", "split"], styles=ALL_STYLES, budget={"total": 5001})
    assert validate(bad) == ["budget.total: total 5001 not divisible by style count 4"]


def test_sft_without_corpus_is_rejected(tmp_path):
    config = synthetic_run_config(tmp_path / "run", ["ingest", "split", "sft", "grpo", "eval"])
    violations = validate(config)
    assert any(v.startswith("stage 'sft' needs an SFT corpus") for v in violations)
    with pytest.raises(ConfigValidationError):
        run(config)
    assert not (tmp_path / "run" / "manifest.json").exists()


def test_validate_reports_all_problems(tmp_path):
    config = synthetic_run_config(
        tmp_path / "run",
        ["ingest", "distill", "analyze", "train"],
        styles=("sarcasm",),
        synthetic={"styles": ["sarcasm", "humor"]},
        inputs={"corpus": str(tmp_path / "missing.jsonl")},
    )
    violations = validate(config)
    assert any("unknown stage(s) ['train']" in v for v in violations)
    assert any(v.startswith("inputs.corpus") for v in violations)
    assert any(v.startswith("synthetic.styles") for v in violations)
    assert any("need stage 'split'" in v for v in violations)
    assert "stage 'analyze' needs stage 'eval'" in violations


def test_stage_names_are_ordered():
    assert STAGES[0] == "ingest" and STAGES[-1] == "gateway_eval"


def test_full_run_writes_every_artifact(tmp_path):
    run_dir = tmp_path / "run"
    manifest = run(synthetic_run_config(run_dir, FULL + ["gateway_eval"]))

    assert list(manifest.stages) == FULL + ["gateway_eval"]
    assert manifest.cache_hits == []
    for name in (
        "samples.jsonl", "train.jsonl", "test.jsonl", "traces.jsonl", "corpus.jsonl",
        "filter_stats.json", "sft.jsonl", "policy-sft-sarcasm.npy", "policy-grpo-sarcasm.npy",
        "grpo-sarcasm.json", "metrics.json", "metrics.md", "predictions.json",
        "analysis.json", "gateway_eval.json", "manifest.json",
    ):
        assert (run_dir / name).exists(), name

    stats = json.loads((run_dir / "filter_stats.json").read_text(encoding="utf-8"))
    assert sum(stats["counts"].values()) == 160
    assert 0 < stats["counts"]["kept"] < 160

    corpus = read_corpus(run_dir / "corpus.jsonl")
    kept = [r for r in corpus if r.kept]
    assert len(kept) == stats["counts"]["kept"]
    assert all(r.trace.final_label for r in kept)

    sft = read_sft_records(run_dir / "sft.jsonl")
    assert len(sft) == len(kept)
    assert all(r.completion.startswith("<think>Step 1:") for r in sft)

    metrics = json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))
    assert metrics["run"]["sarcasm"]["accuracy"] >= 0.9

    gateway = json.loads((run_dir / "gateway_eval.json").read_text(encoding="utf-8"))
    assert gateway["errors"] == 0
    assert 0.0 < gateway["styles"]["sarcasm"]["format_rate"] <= 1.0

    assert RunManifest.load(run_dir).verify(run_dir) == []


def test_runs_in_different_directories_are_identical(tmp_path):
    first = run(synthetic_run_config(tmp_path / "one", FULL))
    second = run(synthetic_run_config(tmp_path / "two", FULL))
    assert _outputs(first) == _outputs(second)
    for stage in FULL:
        assert first.stages[stage].inputs == second.stages[stage].inputs


def test_rerun_is_all_cache_hits(tmp_path):
    config = synthetic_run_config(tmp_path / "run", FULL)
    first = run(config)
    second = run(config)
    assert second.cache_hits == FULL
    assert _outputs(first) == _outputs(second)


def test_deleted_output_is_reproduced(tmp_path):
    run_dir = tmp_path / "run"
    config = synthetic_run_config(run_dir, FULL)
    first = run(config)
    corpus_digest = file_digest(run_dir / "corpus.jsonl")
    (run_dir / "corpus.jsonl").unlink()

    second = run(config)
    assert "filter" not in second.cache_hits
    assert "ingest" in second.cache_hits
    # identical corpus means downstream inputs are unchanged
    assert "export_sft" in second.cache_hits
    assert file_digest(run_dir / "corpus.jsonl") == corpus_digest
    assert _outputs(first) == _outputs(second)


def test_changed_config_reruns_stages(tmp_path):
    run_dir = tmp_path / "run"
    run(synthetic_run_config(run_dir, ["ingest", "split"]))
    again = run(synthetic_run_config(run_dir, ["ingest", "split"], split={"seed": 1}))
    assert again.cache_hits == []


def test_grpo_only_skips_sft(tmp_path):
    run_dir = tmp_path / "run"
    manifest = run(synthetic_run_config(run_dir, ["ingest", "split", "grpo", "eval"], grpo={"init": "base"}))
    assert "sft" not in manifest.stages
    assert not (run_dir / "policy-sft-sarcasm.npy").exists()
    assert (run_dir / "policy-grpo-sarcasm.npy").exists()


def test_zero_shot_evaluates_base_policy(tmp_path):
    run_dir = tmp_path / "run"
    run(synthetic_run_config(run_dir, ["ingest", "split", "eval"]))
    metrics = json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))
    # the base policy answers the negative label everywhere
    assert metrics["run"]["sarcasm"]["accuracy"] == pytest.approx(0.5)
    assert metrics["run"]["sarcasm"]["tp"] == 0


def test_binary_sft_needs_no_corpus(tmp_path):
    run_dir = tmp_path / "run"
    config = synthetic_run_config(run_dir, ["ingest", "split", "export_sft", "sft", "eval"], sft={"target": "binary"})
    assert validate(config) == []
    run(config)
    sft = read_sft_records(run_dir / "sft.jsonl")
    assert len(sft) == 160
    assert {r.completion for r in sft} == {"sarcastic", "not sarcastic"}


def test_combined_budget_run(tmp_path):
    run_dir = tmp_path / "run"
    config = synthetic_run_config(
        run_dir,
        ["ingest", "split", "export_sft", "sft", "eval"],
        n=40,
        styles=ALL_STYLES,
        run={"combined": True},
        sft={"target": "binary"},
        budget={"total": 80, "mode": "combined"},
    )
    run(config)
    assert (run_dir / "policy-sft-combined.npy").exists()
    sft_log = json.loads((run_dir / "sft-combined.json").read_text(encoding="utf-8"))
    assert sft_log["records"] == 80
    metrics = json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))
    assert set(metrics["run"]) == set(ALL_STYLES)


def test_stage_failure_is_wrapped(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json\n", encoding="utf-8")
    config = synthetic_run_config(tmp_path / "run", ["ingest", "split", "filter"], inputs={"traces": str(bad)})
    with pytest.raises(StageError) as excinfo:
        run(config)
    assert excinfo.value.stage == "filter"
    # completed stages are recorded for resumption
    manifest = RunManifest.load(tmp_path / "run")
    assert list(manifest.stages) == ["ingest", "split"]
