"""Run manifests: per-stage input/output digests for resumable, tamper-evident runs."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Mapping

from .errors import VersionMismatchError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA = "figrlvr.manifest"
MANIFEST_VERSION = 1
DISTRIBUTION_NAME = "figurative-rlvr"


def tool_version() -> str:
    try:
        return version(DISTRIBUTION_NAME)
    except PackageNotFoundError:
        return "0+unknown"


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def json_digest(data: Any) -> str:
    """Digest of a JSON-ready value, independent of key order."""
    material = json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


@dataclass
class StageRecord:
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    cache_hit: bool = False
    wall_clock_s: float = 0.0

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StageRecord":
        return cls(
            inputs=dict(data.get("inputs", {})),
            outputs=dict(data.get("outputs", {})),
            cache_hit=bool(data.get("cache_hit", False)),
            wall_clock_s=float(data.get("wall_clock_s", 0.0)),
        )


@dataclass
class RunManifest:
    """Config snapshot plus, per stage, the digests it consumed and produced.

    Output names are paths relative to the run directory.
    """
    config: dict[str, Any] = field(default_factory=dict)
    tool_version: str = field(default_factory=tool_version)
    stages: dict[str, StageRecord] = field(default_factory=dict)

    @property
    def cache_hits(self) -> list[str]:
        return [name for name, record in self.stages.items() if record.cache_hit]

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "version": MANIFEST_VERSION,
            "tool_version": self.tool_version,
            "config": self.config,
            "stages": {name: asdict(record) for name, record in self.stages.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunManifest":
        if data.get("schema") != MANIFEST_SCHEMA or data.get("version") != MANIFEST_VERSION:
            raise VersionMismatchError(
                f"expected {MANIFEST_SCHEMA} v{MANIFEST_VERSION}, "
                f"found {data.get('schema')} v{data.get('version')}"
            )
        return cls(
            config=dict(data.get("config", {})),
            tool_version=str(data.get("tool_version", "")),
            stages={name: StageRecord.from_dict(r) for name, r in data.get("stages", {}).items()},
        )

    def save(self, run_dir: Path) -> Path:
        path = Path(run_dir) / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    @classmethod
    def load(cls, run_dir: Path) -> "RunManifest | None":
        path = Path(run_dir) / MANIFEST_NAME
        if not path.exists():
            return None
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def verify(self, run_dir: Path) -> list[str]:
        """Recompute output digests; returns one message per missing or altered file."""
        problems = []
        for stage, record in self.stages.items():
            for name, expected in record.outputs.items():
                path = Path(run_dir) / name
                if not path.exists():
                    problems.append(f"{stage}: {name} is missing")
                elif file_digest(path) != expected:
                    problems.append(f"{stage}: {name} digest mismatch")
        return problems
