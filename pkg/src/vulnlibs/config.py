"""Engine configuration: defaults, key=value config files and CLI
overrides, precedence flags > file > defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .enhance import DEFAULT_DOMAIN_ALLOWLIST, DEFAULT_STOPWORDS, EnhanceConfig
from .learner import LearnerParams
from .temporal import AdjustmentParams


class ConfigError(ValueError):
    pass


@dataclass
class EngineConfig:
    # enhancement
    domain_allowlist: tuple[str, ...] = tuple(sorted(DEFAULT_DOMAIN_ALLOWLIST))
    reference_word_cut_percent: float = 50.0
    reference_repeat_cap: int = 15
    description_df_cut: float = 0.30
    enhance: bool = True
    # features
    ngram_max: int = 1
    ir_ngram_max: int = 2
    min_df: int = 1
    # learner
    row_budget: int = 64
    loss_weight: float = 1.0
    negatives_per_doc: int = 20
    refine_passes: int = 3
    candidate_cap: int = 50_000
    # time-aware adjustment
    cache_size: int = 300
    recency_magnitude: float = 8.0
    adjust_window: int = 10
    adjust: bool = True
    prewarm: bool = True
    # misc
    top_k: int = 3
    seed: int = 7

    def enhance_config(self) -> EnhanceConfig:
        return EnhanceConfig(
            domain_allowlist=frozenset(self.domain_allowlist),
            top_word_cut_percent=self.reference_word_cut_percent,
            per_reference_cap=self.reference_repeat_cap,
            stopword_list=DEFAULT_STOPWORDS,
            description_df_cut=self.description_df_cut,
        )

    def learner_params(self) -> LearnerParams:
        return LearnerParams(
            row_budget=self.row_budget,
            loss_weight=self.loss_weight,
            negatives_per_doc=self.negatives_per_doc,
            refine_passes=self.refine_passes,
            candidate_cap=self.candidate_cap,
        )

    def adjustment_params(self) -> AdjustmentParams:
        return AdjustmentParams(magnitude=self.recency_magnitude, top_window=self.adjust_window)

    def validate(self) -> None:
        try:
            self.enhance_config().validate()
            self.learner_params().validate()
            self.adjustment_params().validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.cache_size < 1:
            raise ConfigError("cache_size must be >= 1")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.ngram_max not in (1, 2) or self.ir_ngram_max not in (1, 2):
            raise ConfigError("ngram settings must be 1 or 2")
        if self.min_df < 1:
            raise ConfigError("min_df must be >= 1")


_BOOL_VALUES = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _coerce(name: str, raw: str, target_type: type) -> object:
    raw = raw.strip()
    if target_type is bool:
        if raw.lower() not in _BOOL_VALUES:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        return _BOOL_VALUES[raw.lower()]
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    if target_type is tuple:
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    return raw


def load_config_file(path: str | Path) -> dict:
    """Parse `key = value` lines; '#' starts a comment."""
    overrides: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path} line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def build_config(
    file_overrides: dict | None = None, flag_overrides: dict | None = None
) -> EngineConfig:
    cfg = EngineConfig()
    known = {f.name: f.type for f in fields(EngineConfig)}
    type_of = {name: type(getattr(cfg, name)) for name in known}
    for source in (file_overrides or {}, flag_overrides or {}):
        updates = {}
        for key, value in source.items():
            if value is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(value, str):
                value = _coerce(key, value, type_of[key])
            updates[key] = value
        cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg
