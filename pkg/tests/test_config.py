"""Tests for layered configuration loading and typed run settings."""

import inspect
from pathlib import Path

import pytest
import yaml

from figrlvr import cli, config as config_module
from figrlvr.config import Config, RunConfig, load_yaml_file, merge_dicts
from figrlvr.errors import ConfigValidationError
from figrlvr.pipeline import validate
from figrlvr.styles import StyleId

REPO_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "config.yaml"
SETUPS = sorted(p.stem for p in (REPO_CONFIG.parent / "setups").glob("*.yaml"))


def _write_yaml(path: Path, data: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_merge_dicts_is_recursive():
    base = {"grpo": {"beta": 0.04, "group_size": 8}, "run": {"styles": ["sarcasm"]}}
    overlay = {"grpo": {"beta": 0.1}, "run": {"styles": ["humor", "offense"]}}
    merged = merge_dicts(base, overlay)
    assert merged == {"grpo": {"beta": 0.1, "group_size": 8}, "run": {"styles": ["humor", "offense"]}}
    assert base["grpo"]["beta"] == 0.04


def test_load_yaml_file(tmp_path):
    assert load_yaml_file(_write_yaml(tmp_path / "a.yaml", {"x": 1})) == {"x": 1}
    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert load_yaml_file(empty) == {}
    with pytest.raises(FileNotFoundError):
        load_yaml_file(tmp_path / "missing.yaml")
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError):
        load_yaml_file(listing)


def test_json_config_is_accepted(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"run": {"styles": ["humor"]}, "paths": {"output_dir": "out"}}', encoding="utf-8")
    config = Config(path)
    assert config.get("run.styles") == ["humor"]
    assert config.output_dir == tmp_path.resolve() / "out"


def test_setup_overlay_then_overrides(tmp_path):
    config_path = _write_yaml(tmp_path / "configs" / "config.yaml", {
        "paths": {"project_root": "..", "output_dir": "runs/base", "setups_dir": "configs/setups"},
        "grpo": {"beta": 0.04, "group_size": 8},
    })
    _write_yaml(tmp_path / "configs" / "setups" / "hot.yaml", {
        "paths": {"output_dir": "runs/hot"},
        "grpo": {"beta": 0.5},
    })
    config = Config(config_path, setup="hot", overrides={"grpo": {"group_size": 4}})
    assert config.get("grpo.beta") == 0.5
    assert config.get("grpo.group_size") == 4
    assert config.output_dir == tmp_path.resolve() / "runs" / "hot"
    assert config.get("grpo.missing", "fallback") == "fallback"


def test_missing_setup_overlay(tmp_path):
    config_path = _write_yaml(tmp_path / "config.yaml", {"paths": {"output_dir": "out"}})
    with pytest.raises(FileNotFoundError):
        Config(config_path, setup="nope")


def test_run_config_types_values(tmp_path):
    config = Config.from_dict({
        "paths": {"output_dir": "out"},
        "run": {"stages": ["ingest"], "styles": ["Humor", "metaphor"], "seed": 7},
        "synthetic": {"n": 10, "styles": ["humor"]},
        "grpo": {"beta": 0.1, "learning_rate": 0.01},
        "budget": {"total": 100, "mode": "combined"},
    }, tmp_path)
    run = RunConfig.from_config(config)
    assert run.styles == (StyleId.HUMOR, StyleId.METAPHOR)
    assert run.output_dir == tmp_path.resolve() / "out"
    assert run.grpo.beta == 0.1
    assert run.grpo.seed == 7
    assert run.synthetic.styles == (StyleId.HUMOR,)
    assert run.groups == ["combined"]
    assert run.group_styles("combined") == (StyleId.HUMOR, StyleId.METAPHOR)


def test_run_config_groups_per_style(tmp_path):
    config = Config.from_dict({
        "paths": {"output_dir": "out"},
        "run": {"stages": ["ingest"], "styles": ["sarcasm", "offense"]},
    }, tmp_path)
    run = RunConfig.from_config(config)
    assert run.groups == ["sarcasm", "offense"]
    assert run.group_styles("offense") == (StyleId.OFFENSE,)


def test_run_config_collects_every_violation(tmp_path):
    config = Config.from_dict({
        "paths": {"output_dir": "out"},
        "run": {"stages": ["ingest"], "styles": ["sarcasm", "irony"]},
        "grpo": {"group_size": 1},
        "sft": {"target": "essay"},
        "budget": {"mode": "shared"},
    }, tmp_path)
    with pytest.raises(ConfigValidationError) as excinfo:
        RunConfig.from_config(config)
    violations = excinfo.value.violations
    assert len(violations) == 4
    assert any("unknown style 'irony'" in v for v in violations)
    assert any(v.startswith("grpo:") for v in violations)
    assert any(v.startswith("sft.target") for v in violations)
    assert any(v.startswith("budget.mode") for v in violations)
    assert str(excinfo.value).startswith("Invalid run configuration:\n  - ")


def test_snapshot_is_plain_json(tmp_path):
    config = Config.from_dict({
        "paths": {"output_dir": "out"},
        "run": {"stages": ["ingest"], "styles": ["sarcasm"]},
    }, tmp_path)
    snapshot = RunConfig.from_config(config).snapshot()
    assert snapshot["styles"] == ["sarcasm"]
    assert isinstance(snapshot["output_dir"], str)
    assert snapshot["grpo"]["beta"] == 0.04


@pytest.mark.parametrize("setup", [None] + SETUPS)
def test_shipped_configs_validate(setup):
    run = RunConfig.from_config(Config(REPO_CONFIG, setup=setup))
    assert validate(run) == []


def _public_callables_with_arguments():
    for module in (config_module, cli):
        for name, fn in inspect.getmembers(module, inspect.isfunction):
            if not name.startswith("_") and fn.__module__ == module.__name__:
                yield f"{module.__name__}.{name}", fn
    for cls in (Config, RunConfig):
        for name, member in vars(cls).items():
            fn = getattr(member, "__func__", member)
            if not name.startswith("_") and inspect.isfunction(fn):
                yield f"{cls.__name__}.{name}", fn


def test_public_functions_document_their_arguments():
    undocumented = []
    for qualname, fn in _public_callables_with_arguments():
        params = [p for p in inspect.signature(fn).parameters if p not in ("self", "cls")]
        if params and "Args:" not in (inspect.getdoc(fn) or ""):
            undocumented.append(qualname)
    assert undocumented == []
