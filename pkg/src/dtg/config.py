"""Policy configuration shared by the localizer and the CLI."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path


@dataclass(frozen=True)
class PolicyConfig:
    touched_weight: float = 0.6
    constraint_weight: float = 0.3
    semantic_weight: float = 0.1
    exploration: float = 1.0
    rollout_depth: int = 5
    budget: int = 60
    seed: int = 0
    view_radius: int = 2
    convergence_ratio: float = 0.5
    convergence_streak: int = 3
    proximity_decay: float = 0.5

    def with_overrides(self, **kwargs) -> "PolicyConfig":
        return replace(self, **kwargs)

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def from_file(cls, path: str | Path) -> "PolicyConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown policy config field(s): {sorted(unknown)}")
        return cls(**raw)
