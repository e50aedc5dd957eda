"""Run configuration: defaults plus an optional flat `key = value` file.

Files are UTF-8, one assignment per line, `#` starts a comment. Keys are
namespaced with dots. Unknown keys and unparsable values are hard errors;
silently ignoring a typo in, say, `loss.lambda_hem` would invalidate a run.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .losses import LossWeights
from .msrb import MsrbConfig


class ConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass
class RunConfig:
    temperature: float = 0.01
    match_level: int = 8
    tile_rows: int = 1024
    seed: int = 0
    epochs: int = 50
    learning_rate: float = 2e-4
    batch_size: int = 8
    deterministic: bool = True
    resize: str = "none"                 # "none" or "WxH", e.g. "384x224"
    btfb_equation_literal: bool = False
    c_seg: int = 19
    msrb_base_channels: int = 32
    msrb_unet_depth: int = 3
    msrb_share_level_weights: bool = False
    loss_lambda_edge: float = 2.0
    loss_lambda_hem: float = 2.0
    loss_lambda_c: float = 1.0
    loss_hem_fraction: float = 0.5
    loss_lambda_percep: float = 0.1
    loss_lambda_temporal: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if self.match_level not in (4, 8):
            raise ConfigError(f"match_level must be 4 or 8, got {self.match_level}")
        if self.tile_rows < 1:
            raise ConfigError(f"tile_rows must be >= 1, got {self.tile_rows}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        self.resize_hw()   # validates the format

    def resize_hw(self):
        """(H, W) target or None; the file format is `WxH` like image sizes."""
        if self.resize == "none":
            return None
        parts = self.resize.lower().split("x")
        try:
            w, h = int(parts[0]), int(parts[1])
        except (ValueError, IndexError):
            raise ConfigError(f"resize must be 'none' or 'WxH', got {self.resize!r}") from None
        if len(parts) != 2 or w < 1 or h < 1:
            raise ConfigError(f"resize must be 'none' or 'WxH', got {self.resize!r}")
        return (h, w)

    def msrb_config(self) -> MsrbConfig:
        return MsrbConfig(base_channels=self.msrb_base_channels,
                          unet_depth=self.msrb_unet_depth,
                          c_seg=self.c_seg,
                          share_level_weights=self.msrb_share_level_weights)

    def loss_weights(self) -> LossWeights:
        return LossWeights(lambda_edge=self.loss_lambda_edge,
                           lambda_hem=self.loss_lambda_hem,
                           lambda_c=self.loss_lambda_c,
                           hem_fraction=self.loss_hem_fraction,
                           lambda_percep=self.loss_lambda_percep,
                           lambda_temporal=self.loss_lambda_temporal)


# config-file key -> dataclass field
_KEY_TO_FIELD = {
    "temperature": "temperature",
    "match_level": "match_level",
    "tile_rows": "tile_rows",
    "seed": "seed",
    "epochs": "epochs",
    "learning_rate": "learning_rate",
    "batch_size": "batch_size",
    "deterministic": "deterministic",
    "resize": "resize",
    "btfb.equation_literal": "btfb_equation_literal",
    "c_seg": "c_seg",
    "msrb.base_channels": "msrb_base_channels",
    "msrb.unet_depth": "msrb_unet_depth",
    "msrb.share_level_weights": "msrb_share_level_weights",
    "loss.lambda_edge": "loss_lambda_edge",
    "loss.lambda_hem": "loss_lambda_hem",
    "loss.lambda_c": "loss_lambda_c",
    "loss.hem_fraction": "loss_hem_fraction",
    "loss.lambda_percep": "loss_lambda_percep",
    "loss.lambda_temporal": "loss_lambda_temporal",
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_PARSERS = {"int": int, "float": float, "bool": _parse_bool, "str": str}


def parse_config(path) -> RunConfig:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            field = _KEY_TO_FIELD.get(key)
            if field is None:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if field in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            parser = _PARSERS[_FIELD_TYPES[field]]
            try:
                values[field] = parser(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return RunConfig(**values)
