"""Configuration management for figurative-language RLVR runs."""

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable

import yaml

from .errors import ConfigValidationError
from .grpo import GrpoConfig, SftConfig, toy_profile
from .gateway import GatewaySettings
from .styles import StyleId, get_style

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def load_yaml_file(file_path: Path) -> Dict[str, Any]:
    """Load a YAML (or JSON) file and return its contents.

    Args:
        file_path: File to read; JSON parses as YAML.

    Returns:
        The top-level mapping, or an empty dict for an empty file.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigValidationError: If the top level is not a mapping.
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {file_path}")

    with open(file_path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigValidationError([f"{file_path}: top level must be a mapping"])
    return data


def merge_dicts(base: Dict[str, Any], overlay: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge two dictionaries, overlay taking precedence.

    Args:
        base: Lower-priority mapping; not modified.
        overlay: Higher-priority mapping; nested dicts merge key by key.

    Returns:
        A new merged dictionary.
    """
    result = base.copy()
    for key, value in overlay.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_dicts(result[key], value)
        else:
            result[key] = value
    return result


def setup_logging(level: str = 'INFO', force: bool = False):
    """Configure root logging with the package format.

    Args:
        level: Level name; unknown names fall back to INFO.
        force: Replace handlers installed by an earlier call.
    """
    numeric_level = getattr(logging, str(level).upper(), logging.INFO)
    logging.basicConfig(
        level=numeric_level,
        format=LOG_FORMAT,
        datefmt='%Y-%m-%d %H:%M:%S',
        force=force,
    )


def _override(base, section: Any, name: str, violations: list[str]):
    if section is None:
        return base
    if not isinstance(section, dict):
        violations.append(f"{name}: must be a mapping")
        return base
    known = {f.name for f in fields(base)} - {"seed"}
    unknown = sorted(set(section) - known)
    if unknown:
        violations.append(f"{name}: unknown key(s) {unknown}. Valid keys: {', '.join(sorted(known))}")
        return base
    try:
        return replace(base, **section)
    except (TypeError, ValueError) as e:
        violations.append(f"{name}: {e}")
        return base


def load_toy_profile(path: Path | None, seed: int = 0) -> tuple[SftConfig, GrpoConfig]:
    """Toy SFT and GRPO settings: the built-in profile with a file's overrides.

    Args:
        path: YAML/JSON file with optional ``sft`` and ``grpo`` sections whose
            keys are SftConfig/GrpoConfig fields; ``None`` keeps the profile.
        seed: Seed for both configs; a file cannot override it.

    Returns:
        (SftConfig, GrpoConfig)

    Raises:
        ConfigValidationError: Unknown keys or out-of-contract values.
    """
    sft, grpo = toy_profile(seed)
    if path is None:
        return sft, grpo
    data = load_yaml_file(path)
    violations: list[str] = []
    sft = _override(sft, data.get('sft'), 'sft', violations)
    grpo = _override(grpo, data.get('grpo'), 'grpo', violations)
    if violations:
        raise ConfigValidationError(violations)
    logger.debug(f"Loaded toy profile overrides from: {path}")
    return sft, grpo


class Config:
    """Run configuration: a base file, an optional setup overlay, then overrides.

    Merge order (each layer overrides the previous):
    1. the base config file
    2. ``<setups_dir>/<setup>.yaml`` when a setup name is given
    3. ``overrides`` (CLI flags, tests)
    """

    def __init__(
        self,
        config_path: str | Path = 'configs/config.yaml',
        setup: str | None = None,
        overrides: Dict[str, Any] | None = None,
    ):
        """Load the base file and apply the overlay and overrides.

        Args:
            config_path: Base YAML/JSON config.
            setup: Overlay name under ``paths.setups_dir``.
            overrides: Mapping merged last.

        Raises:
            FileNotFoundError: Missing base or overlay file.
        """
        self.config_path = Path(config_path)
        main_config = load_yaml_file(self.config_path)
        self._init(main_config, self.config_path.parent, setup, overrides)

    @classmethod
    def from_dict(
        cls,
        main_config: Dict[str, Any],
        config_dir: Path | None = None,
        *,
        setup: str | None = None,
        overrides: Dict[str, Any] | None = None,
    ) -> "Config":
        """Create a Config from an already-loaded mapping.

        Args:
            main_config: Configuration dictionary
            config_dir: Directory relative paths are resolved against (default: cwd)
            setup: Overlay name under ``paths.setups_dir``
            overrides: Mapping merged last

        Returns:
            Configured Config instance
        """
        config = cls.__new__(cls)
        config_dir = Path(config_dir) if config_dir is not None else Path.cwd()
        config.config_path = config_dir / "config.yaml"  # Virtual path
        config._init(main_config, config_dir, setup, overrides)
        return config

    def _init(
        self,
        main_config: Dict[str, Any],
        config_dir: Path,
        setup: str | None,
        overrides: Dict[str, Any] | None,
    ):
        paths_config = main_config.get('paths', {})
        if 'project_root' in paths_config:
            self.project_root = (config_dir / paths_config['project_root']).resolve()
        else:
            self.project_root = config_dir.resolve()
        self._paths = paths_config

        merged = dict(main_config)
        self.setup = setup
        if setup:
            overlay_path = self.setup_path(setup)
            merged = merge_dicts(merged, load_yaml_file(overlay_path))
            logger.debug(f"Loaded setup overlay from: {overlay_path}")
        if overrides:
            merged = merge_dicts(merged, overrides)

        self._config = merged
        self._paths = merged.get('paths', {})
        self._setup_logging()
        logger.debug(f"Loaded main config from: {self.config_path}")

    def setup_path(self, setup: str) -> Path:
        """Overlay file for a setup name.

        Args:
            setup: Setup name, e.g. 'grpo_only'

        Returns:
            Path of the overlay YAML under ``paths.setups_dir``
        """
        setups_dir = self._paths.get('setups_dir', 'configs/setups')
        return self._resolve_path_value(setups_dir) / f"{setup}.yaml"

    def _resolve_path_value(self, value: str | None) -> Path:
        """Resolve a path value relative to project_root if not absolute."""
        if not value:
            return Path()
        p = Path(value)
        if not p.is_absolute():
            return self.project_root / p
        return p.resolve()

    def _setup_logging(self):
        """Setup logging based on configuration."""
        setup_logging(self.get('settings.logging.level', 'INFO'))

    def get(self, key_path: str, default: Any = None) -> Any:
        """Get configuration value using dot notation.

        Args:
            key_path: Dotted key, e.g. 'grpo.beta'
            default: Returned when any segment is missing

        Returns:
            The value, or ``default``
        """
        keys = key_path.split('.')
        value = self._config

        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default

        return value

    def get_path(self, key: str) -> Path:
        """Get a path from the ``paths`` section, resolved relative to project_root.

        Args:
            key: Key under ``paths``, e.g. 'output_dir'

        Raises:
            ValueError: If ``paths`` has no such key.
        """
        path_str = self._paths.get(key)
        if path_str is None:
            raise ValueError(f"Path '{key}' not found in configuration")
        return self._resolve_path_value(path_str)

    def resolve(self, value: str | None) -> Path | None:
        """Resolve an optional path value; ``None`` and empty stay ``None``.

        Args:
            value: Absolute path, or one relative to project_root
        """
        return self._resolve_path_value(value) if value else None

    def as_dict(self) -> Dict[str, Any]:
        """JSON-safe copy of the merged configuration."""
        return json.loads(json.dumps(self._config, default=str))

    @property
    def output_dir(self) -> Path:
        return self.get_path('output_dir')


# ---------------------------------------------------------------------------
# Typed run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSpec:
    path: Path
    adapter: str = "generic-jsonl"
    style: StyleId | None = None
    split: str | None = None
    threshold: int = 1


@dataclass(frozen=True)
class SyntheticSettings:
    n: int = 200
    seed: int = 0
    styles: tuple[StyleId, ...] = (StyleId.SARCASM,)
    teacher_wrong_rate: float = 0.1
    teacher_drop_rate: float = 0.05
    student_accuracy: float = 0.8


@dataclass(frozen=True)
class GatewayRunSettings:
    """Endpoint and decoding settings; ``endpoint: mock`` serves scripted outputs in-process."""
    endpoint: str = "mock"
    teacher_model: str = "gpt-4o"
    student_model: str = "qwen2.5-vl-3b-instruct"
    temperature: float = 0.0
    max_tokens: int = 1024
    max_in_flight: int = 4
    images_dir: Path | None = None

    @property
    def is_mock(self) -> bool:
        return self.endpoint == "mock"

    def to_settings(self) -> GatewaySettings:
        return GatewaySettings.from_env(endpoint=None if self.is_mock else self.endpoint)


@dataclass(frozen=True)
class BudgetSettings:
    total: int | None = None
    mode: str = "style_specific"


@dataclass(frozen=True)
class InputPaths:
    """Pre-existing artifacts that stand in for stages not run."""
    samples: Path | None = None
    traces: Path | None = None
    corpus: Path | None = None
    policy: Path | None = None


BUDGET_MODES = ("style_specific", "combined")
SFT_TARGETS = ("cot", "binary")
GRPO_INITS = ("sft", "base")


def _style_tuple(values: Iterable[Any], where: str, violations: list[str]) -> tuple[StyleId, ...]:
    resolved = []
    for value in values or ():
        try:
            resolved.append(get_style(value).id)
        except ValueError:
            violations.append(f"{where}: unknown style '{value}'")
    return tuple(resolved)


@dataclass
class RunConfig:
    """Everything a pipeline run needs, with paths already resolved."""
    stages: list[str]
    styles: tuple[StyleId, ...]
    output_dir: Path
    setup: str | None = None
    combined: bool = False
    datasets: list[DatasetSpec] = field(default_factory=list)
    synthetic: SyntheticSettings | None = None
    split_policy: str = "seeded_80_20"
    split_seed: int = 0
    train_fraction: float = 0.8
    gateway: GatewayRunSettings = field(default_factory=GatewayRunSettings)
    sft: SftConfig = field(default_factory=SftConfig)
    sft_target: str = "cot"
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    grpo_init: str = "sft"
    budget: BudgetSettings = field(default_factory=BudgetSettings)
    inputs: InputPaths = field(default_factory=InputPaths)
    seed: int = 0
    strict_acc: bool = False
    log_level: str = "INFO"

    @property
    def grouped_combined(self) -> bool:
        return self.combined or self.budget.mode == "combined"

    @property
    def groups(self) -> list[str]:
        """Training groups: one per style, or a single 'combined' group."""
        if self.grouped_combined:
            return ["combined"]
        return [s.value for s in self.styles]

    def group_styles(self, group: str) -> tuple[StyleId, ...]:
        """Styles trained together in ``group``.

        Args:
            group: A style name, or 'combined' for every configured style

        Returns:
            Tuple of StyleId
        """
        return self.styles if group == "combined" else (StyleId(group),)

    @classmethod
    def from_config(cls, config: Config) -> "RunConfig":
        """Map a merged Config onto typed settings.

        Args:
            config: Merged configuration (defaults, run file, overrides)

        Returns:
            RunConfig

        Raises:
            ConfigValidationError: Values that cannot be typed at all
                (unknown styles, bad hyperparameters). Path and dependency
                checks live in ``pipeline.validate``.
        """
        violations: list[str] = []
        get = config.get

        styles = _style_tuple(get('run.styles', []), 'run.styles', violations)

        datasets = []
        for i, entry in enumerate(get('datasets', []) or []):
            if not isinstance(entry, dict) or 'path' not in entry:
                violations.append(f"datasets[{i}]: needs a 'path'")
                continue
            style = None
            if entry.get('style'):
                found = _style_tuple([entry['style']], f"datasets[{i}].style", violations)
                style = found[0] if found else None
            datasets.append(DatasetSpec(
                path=config.resolve(entry['path']),
                adapter=entry.get('adapter', 'generic-jsonl'),
                style=style,
                split=entry.get('split'),
                threshold=int(entry.get('threshold', 1)),
            ))

        synthetic = None
        if get('synthetic'):
            synthetic = SyntheticSettings(
                n=int(get('synthetic.n', 200)),
                seed=int(get('synthetic.seed', 0)),
                styles=_style_tuple(get('synthetic.styles', ['sarcasm']), 'synthetic.styles', violations),
                teacher_wrong_rate=float(get('synthetic.teacher_wrong_rate', 0.1)),
                teacher_drop_rate=float(get('synthetic.teacher_drop_rate', 0.05)),
                student_accuracy=float(get('synthetic.student_accuracy', 0.8)),
            )

        seed = int(get('run.seed', 0))
        gateway = GatewayRunSettings(
            endpoint=str(get('gateway.endpoint', 'mock')),
            teacher_model=str(get('gateway.teacher_model', 'gpt-4o')),
            student_model=str(get('gateway.student_model', 'qwen2.5-vl-3b-instruct')),
            temperature=float(get('gateway.temperature', 0.0)),
            max_tokens=int(get('gateway.max_tokens', 1024)),
            max_in_flight=int(get('gateway.max_in_flight', 4)),
            images_dir=config.resolve(get('paths.images_dir')),
        )

        sft = grpo = None
        try:
            sft = SftConfig(
                epochs=int(get('sft.epochs', 5)),
                learning_rate=float(get('sft.learning_rate', 2e-4)),
                schedule=str(get('sft.schedule', 'cosine')),
                batch_size=get('sft.batch_size', 16),
                seed=seed,
            )
        except ValueError as e:
            violations.append(f"sft: {e}")
        try:
            grpo = GrpoConfig(
                group_size=int(get('grpo.group_size', 8)),
                beta=float(get('grpo.beta', 0.04)),
                learning_rate=float(get('grpo.learning_rate', 1e-5)),
                epochs=int(get('grpo.epochs', 2)),
                epsilon_std=float(get('grpo.epsilon_std', 1e-8)),
                seed=seed,
                max_grad_norm=get('grpo.max_grad_norm', 1.0),
            )
        except ValueError as e:
            violations.append(f"grpo: {e}")

        sft_target = str(get('sft.target', 'cot'))
        if sft_target not in SFT_TARGETS:
            violations.append(f"sft.target: must be one of {', '.join(SFT_TARGETS)}, got '{sft_target}'")
        grpo_init = str(get('grpo.init', 'sft'))
        if grpo_init not in GRPO_INITS:
            violations.append(f"grpo.init: must be one of {', '.join(GRPO_INITS)}, got '{grpo_init}'")
        budget = BudgetSettings(total=get('budget.total'), mode=str(get('budget.mode', 'style_specific')))
        if budget.mode not in BUDGET_MODES:
            violations.append(f"budget.mode: must be one of {', '.join(BUDGET_MODES)}, got '{budget.mode}'")

        if violations:
            raise ConfigValidationError(violations)

        return cls(
            stages=list(get('run.stages', []) or []),
            styles=styles,
            output_dir=config.output_dir,
            setup=config.setup,
            combined=bool(get('run.combined', False)),
            datasets=datasets,
            synthetic=synthetic,
            split_policy=str(get('split.policy', 'seeded_80_20')),
            split_seed=int(get('split.seed', seed)),
            train_fraction=float(get('split.train_fraction', 0.8)),
            gateway=gateway,
            sft=sft,
            sft_target=sft_target,
            grpo=grpo,
            grpo_init=grpo_init,
            budget=budget,
            inputs=InputPaths(
                samples=config.resolve(get('inputs.samples')),
                traces=config.resolve(get('inputs.traces')),
                corpus=config.resolve(get('inputs.corpus')),
                policy=config.resolve(get('inputs.policy')),
            ),
            seed=seed,
            strict_acc=bool(get('run.strict_acc', False)),
            log_level=str(get('settings.logging.level', 'INFO')),
        )

    def snapshot(self) -> Dict[str, Any]:
        """JSON-ready view of the run settings, stable across processes."""
        data = asdict(self)

        def plain(value: Any) -> Any:
            if isinstance(value, Path):
                return value.as_posix()
            if isinstance(value, StyleId):
                return value.value
            if isinstance(value, dict):
                return {k: plain(v) for k, v in value.items()}
            if isinstance(value, (list, tuple)):
                return [plain(v) for v in value]
            return value

        return plain(data)
