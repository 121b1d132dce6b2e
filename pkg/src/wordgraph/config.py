"""Pipeline configuration: a YAML (or JSON) mapping plus flag overrides."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import yaml

from .centrality import DEFAULT_TOP_R, DistanceTransform
from .community import DEFAULT_MIN_GAIN
from .embedding import DEFAULT_FLOOR, DEFAULT_K
from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    vectors_path: Optional[str] = None
    k: int = DEFAULT_K
    floor: float = DEFAULT_FLOOR
    min_gain: float = DEFAULT_MIN_GAIN
    rng_seed: Optional[int] = None
    transform: str = DistanceTransform.ONE_MINUS_S.value
    normalize: bool = False
    top_r: int = DEFAULT_TOP_R
    output_dir: str = "out"

    def __post_init__(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.vectors_path is None or isinstance(self.vectors_path, str),
             "vectors_path must be a string")
        need(_is_int(self.k) and self.k >= 1, f"k must be a positive integer, got {self.k!r}")
        need(_is_real(self.floor) and 0.0 < self.floor < 1.0,
             f"floor must lie in (0, 1), got {self.floor!r}")
        need(_is_real(self.min_gain) and self.min_gain >= 0.0,
             f"min_gain must be >= 0, got {self.min_gain!r}")
        need(self.rng_seed is None or _is_int(self.rng_seed),
             f"rng_seed must be an integer, got {self.rng_seed!r}")
        need(self.transform in {t.value for t in DistanceTransform},
             f"transform must be one of one_minus_s, reciprocal, got {self.transform!r}")
        need(isinstance(self.normalize, bool), "normalize must be true or false")
        need(_is_int(self.top_r) and self.top_r >= 1,
             f"top_r must be a positive integer, got {self.top_r!r}")
        need(isinstance(self.output_dir, str) and self.output_dir,
             "output_dir must be a non-empty string")

    @classmethod
    def from_mapping(cls, data) -> "PipelineConfig":
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(map(str, unknown))}")
        data = dict(data)
        for key in ("floor", "min_gain"):
            # PyYAML reads exponent literals without a dot ("1e-7") as strings
            if isinstance(data.get(key), str):
                try:
                    data[key] = float(data[key])
                except ValueError:
                    raise ConfigError(f"{key} must be a number, got {data[key]!r}")
        return cls(**data)

    def override(self, **flags) -> "PipelineConfig":
        """Copy with every non-``None`` flag applied."""
        return replace(self, **{k: v for k, v in flags.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def load_config(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return PipelineConfig.from_mapping(data)
