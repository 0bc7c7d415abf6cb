"""Pipeline configuration: YAML file, environment overrides, defaults.

The file is a YAML mapping with sections paths, cohort, topics, train, eval,
and synth. Every key has a default, so an empty file is a valid config.
Environment variables override file values using the prefix RISINGSTARS_ and
a double underscore between section and key, e.g. RISINGSTARS_COHORT__T=2009.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from .ranker import TrainConfig
from .synth import SynthConfig

ENV_PREFIX = "RISINGSTARS_"


@dataclass(frozen=True, slots=True)
class PathsSection:
    corpus: str = "corpus.jsonl"
    workdir: str = "workdir"


@dataclass(frozen=True, slots=True)
class CohortSection:
    t: int = 2008
    t_1st: int = 2006
    delta_t: int = 4


@dataclass(frozen=True, slots=True)
class TopicsSection:
    n_topics: int = 10
    top_m: int = 3
    alpha: float | None = None  # defaults to 50 / n_topics at fit time
    beta: float = 0.01
    iterations: int = 200
    seed: int = 0


@dataclass(frozen=True, slots=True)
class TrainSection:
    alpha: float = 0.01
    lambda_w: float = 0.01
    max_epochs: int = 100
    rel_tol: float = 1e-6
    pair_cap: int = 2_000_000
    seed: int = 0


@dataclass(frozen=True, slots=True)
class EvalSection:
    k: tuple[float, ...] = (10.0, 20.0)
    ratio: float = 0.5
    seed: int = 0
    r_hat: int = 1  # 1-based topic number
    min_group: int = 100


@dataclass(frozen=True, slots=True)
class SynthSection:
    n_authors: int = 300
    n_venues: int = 8
    first_year: int = 2000
    last_year: int = 2012
    papers_per_author_year: float = 1.2
    refs_per_paper: int = 8
    attachment_exponent: float = 1.0
    n_topics: int = 4
    vocab_size: int = 120
    signal_strength: float = 0.8
    cohort_year: int = 2006
    seed: int = 0


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    paths: PathsSection
    cohort: CohortSection
    topics: TopicsSection
    train: TrainSection
    eval: EvalSection
    synth: SynthSection


_SECTIONS = {
    "paths": PathsSection,
    "cohort": CohortSection,
    "topics": TopicsSection,
    "train": TrainSection,
    "eval": EvalSection,
    "synth": SynthSection,
}


def _check_type(section: str, name: str, annotation: str, value):
    """Validate one field value against its dataclass annotation."""
    key = f"{section}.{name}"
    if annotation == "int":
        if type(value) is not int:
            raise ValueError(f"key {key} expects int, got {type(value).__name__}")
        return value
    if annotation == "float":
        if type(value) is bool or not isinstance(value, (int, float)):
            raise ValueError(f"key {key} expects float, got {type(value).__name__}")
        return float(value)
    if annotation == "float | None":
        if value is None:
            return None
        if type(value) is bool or not isinstance(value, (int, float)):
            raise ValueError(f"key {key} expects float or null, got {type(value).__name__}")
        return float(value)
    if annotation == "str":
        if not isinstance(value, str):
            raise ValueError(f"key {key} expects str, got {type(value).__name__}")
        return value
    if annotation == "tuple[float, ...]":
        if not isinstance(value, (list, tuple)) or not value:
            raise ValueError(f"key {key} expects a non-empty list of numbers")
        out = []
        for item in value:
            if type(item) is bool or not isinstance(item, (int, float)):
                raise ValueError(f"key {key} expects a non-empty list of numbers")
            out.append(float(item))
        return tuple(out)
    raise AssertionError(f"unhandled annotation {annotation!r} for {key}")


def _parse_section(section: str, data: dict) -> object:
    cls = _SECTIONS[section]
    allowed = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in allowed:
            raise ValueError(f"unknown key: {section}.{key}")
        kwargs[key] = _check_type(section, key, allowed[key].type, value)
    return cls(**kwargs)


def _env_overrides(env) -> dict[str, dict]:
    """Nested {section: {key: value}} parsed from RISINGSTARS_SECTION__KEY vars."""
    nested: dict[str, dict] = {}
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        if "__" not in rest:
            raise ValueError(f"unknown key: {rest.lower()}")
        section, key = rest.split("__", 1)
        nested.setdefault(section.lower(), {})[key.lower()] = yaml.safe_load(env[name])
    return nested


def _validate(config: PipelineConfig) -> None:
    if config.cohort.delta_t < 1:
        raise ValueError("key cohort.delta_t must be at least 1")
    if config.cohort.t < config.cohort.t_1st:
        raise ValueError("key cohort.t must not precede cohort.t_1st")
    if not 0.0 < config.eval.ratio < 1.0:
        raise ValueError("key eval.ratio must lie strictly between 0 and 1")
    if any(not 0.0 < k <= 100.0 for k in config.eval.k):
        raise ValueError("key eval.k entries must lie in (0, 100]")
    if config.eval.r_hat < 1:
        raise ValueError("key eval.r_hat is 1-based and must be at least 1")
    if config.eval.r_hat > config.topics.n_topics:
        raise ValueError("key eval.r_hat exceeds topics.n_topics")
    if config.eval.min_group < 0:
        raise ValueError("key eval.min_group must be non-negative")
    if config.topics.n_topics < 1:
        raise ValueError("key topics.n_topics must be at least 1")
    if not 1 <= config.topics.top_m <= config.topics.n_topics:
        raise ValueError("key topics.top_m must lie in [1, topics.n_topics]")
    if config.topics.iterations < 1:
        raise ValueError("key topics.iterations must be at least 1")
    if config.train.max_epochs < 1:
        raise ValueError("key train.max_epochs must be at least 1")
    if config.train.pair_cap < 1:
        raise ValueError("key train.pair_cap must be at least 1")


def parse_config(
    path: str | Path | None,
    env=None,
    seed: int | None = None,
    workdir: str | None = None,
) -> PipelineConfig:
    """Load and validate the config; env and CLI overrides applied in that order."""
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValueError("config file must be a mapping of sections")
        raw = loaded

    merged: dict[str, dict] = {}
    for section, data in raw.items():
        if section not in _SECTIONS:
            raise ValueError(f"unknown key: {section}")
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ValueError(f"key {section} expects a mapping of keys")
        merged[section] = dict(data)

    env_map = os.environ if env is None else env
    for section, data in _env_overrides(env_map).items():
        if section not in _SECTIONS:
            raise ValueError(f"unknown key: {section}")
        merged.setdefault(section, {}).update(data)

    if workdir is not None:
        merged.setdefault("paths", {})["workdir"] = workdir
    if seed is not None:
        for section in ("topics", "train", "eval", "synth"):
            merged.setdefault(section, {})["seed"] = seed

    sections = {
        name: _parse_section(name, merged.get(name, {})) for name in _SECTIONS
    }
    config = PipelineConfig(**sections)
    _validate(config)
    return config


def resolved_dict(config: PipelineConfig) -> dict:
    """Fully resolved config as plain data, echoed into provenance and reports."""
    out = {}
    for name, cls in _SECTIONS.items():
        section = getattr(config, name)
        out[name] = {
            f.name: (list(v) if isinstance(v := getattr(section, f.name), tuple) else v)
            for f in fields(cls)
        }
    return out


def config_hash(config: PipelineConfig) -> str:
    """Hash of the semantic sections; paths are excluded so artifacts relocate."""
    semantic = {k: v for k, v in resolved_dict(config).items() if k != "paths"}
    payload = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def train_config(config: PipelineConfig) -> TrainConfig:
    t = config.train
    return TrainConfig(
        alpha=t.alpha,
        lambda_w=t.lambda_w,
        max_epochs=t.max_epochs,
        rel_tol=t.rel_tol,
        pair_cap=t.pair_cap,
        seed=t.seed,
    )


def synth_config(config: PipelineConfig) -> SynthConfig:
    s = config.synth
    return SynthConfig(
        n_authors=s.n_authors,
        n_venues=s.n_venues,
        first_year=s.first_year,
        last_year=s.last_year,
        papers_per_author_year=s.papers_per_author_year,
        refs_per_paper=s.refs_per_paper,
        attachment_exponent=s.attachment_exponent,
        n_topics=s.n_topics,
        vocab_size=s.vocab_size,
        signal_strength=s.signal_strength,
        cohort_year=s.cohort_year,
        seed=s.seed,
    )
