"""Pipeline configuration: one INI file drives every command.

All pipeline constants live here as defaults; the modules keep the same
values as importable defaults, and the command layer passes config values
down so nothing needs editing source to change a threshold.  Configs
round-trip through save/load without loss.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from . import ConfigError

_UNSET = ""


@dataclass(frozen=True)
class PipelineConfig:
    # paths
    dump: Path | None = None
    out_dir: Path = Path("out")
    rank_list: Path | None = None
    parallel_informal: Path | None = None
    parallel_formal: Path | None = None
    aoa_lexicon: Path | None = None
    concreteness_lexicon: Path | None = None
    parse_sidecar: Path | None = None
    ner_sidecar: Path | None = None
    pos_sidecar: Path | None = None
    translation_terms: Path | None = None
    gazetteer: Path | None = None
    function_words: Path | None = None
    annotations: Path | None = None
    # languages
    partners: tuple[str, ...] = ("el", "ro", "ru", "tl", "id")
    subreddits: tuple[str, ...] = ()
    # thresholds
    min_share: float = 0.05
    min_post_tokens: int = 5
    max_quote_tokens: int = 5
    rank_cutoff: int = 10000
    marker_threshold: float = -5.0
    alpha0: float = 1000.0
    min_author_tokens: int = 50
    min_cohort_posts: int = 100
    high_cs_fraction: float = 0.20
    low_cs_fraction: float = 0.02
    # lda
    t_min: int = 2
    t_max: int = 8
    lda_alpha: float | None = None
    lda_beta: float = 0.01
    lda_iterations: int = 1000
    lda_seeds: tuple[int, ...] = (0,)
    n_partitions: int = 30
    top_terms_n: int = 100
    coherence_top_n: int = 10
    similarity_mode: str = "avg"
    # fetch
    fetch_url: str | None = None
    fetch_page_size: int = 100
    fetch_max_posts: int | None = None
    # run
    seed: int = 0


# (field, section, parser-kind); kinds drive both load and save
_SCHEMA = [
    ("dump", "paths", "path"),
    ("out_dir", "paths", "path"),
    ("rank_list", "paths", "path"),
    ("parallel_informal", "paths", "path"),
    ("parallel_formal", "paths", "path"),
    ("aoa_lexicon", "paths", "path"),
    ("concreteness_lexicon", "paths", "path"),
    ("parse_sidecar", "paths", "path"),
    ("ner_sidecar", "paths", "path"),
    ("pos_sidecar", "paths", "path"),
    ("translation_terms", "paths", "path"),
    ("gazetteer", "paths", "path"),
    ("function_words", "paths", "path"),
    ("annotations", "paths", "path"),
    ("partners", "languages", "strings"),
    ("subreddits", "languages", "strings"),
    ("min_share", "thresholds", "float"),
    ("min_post_tokens", "thresholds", "int"),
    ("max_quote_tokens", "thresholds", "int"),
    ("rank_cutoff", "thresholds", "int"),
    ("marker_threshold", "thresholds", "float"),
    ("alpha0", "thresholds", "float"),
    ("min_author_tokens", "thresholds", "int"),
    ("min_cohort_posts", "thresholds", "int"),
    ("high_cs_fraction", "thresholds", "float"),
    ("low_cs_fraction", "thresholds", "float"),
    ("t_min", "lda", "int"),
    ("t_max", "lda", "int"),
    ("lda_alpha", "lda", "float"),
    ("lda_beta", "lda", "float"),
    ("lda_iterations", "lda", "int"),
    ("lda_seeds", "lda", "ints"),
    ("n_partitions", "lda", "int"),
    ("top_terms_n", "lda", "int"),
    ("coherence_top_n", "lda", "int"),
    ("similarity_mode", "lda", "str"),
    ("fetch_url", "fetch", "str"),
    ("fetch_page_size", "fetch", "int"),
    ("fetch_max_posts", "fetch", "int"),
    ("seed", "run", "int"),
]

_BY_SECTION_KEY = {(section, name): (name, kind)
                   for name, section, kind in _SCHEMA}


def _parse_value(kind: str, raw: str, key: str):
    raw = raw.strip()
    if raw == _UNSET:
        return None if kind in ("path", "str", "float", "int") else ()
    try:
        if kind == "path":
            return Path(raw)
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "strings":
            return tuple(part.strip() for part in raw.split(",") if part.strip())
        if kind == "ints":
            return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} "
                          f"as {kind}") from None
    raise AssertionError(f"unknown kind {kind}")


def _format_value(kind: str, value) -> str:
    if value is None:
        return _UNSET
    if kind in ("strings", "ints"):
        return ", ".join(str(v) for v in value)
    return str(value)


def load_config(path: str | Path) -> PipelineConfig:
    """Parse an INI config file; unknown keys and bad values are fatal."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            entry = _BY_SECTION_KEY.get((section, key))
            if entry is None:
                raise ConfigError(
                    f"unknown config key [{section}] {key} in {path}")
            name, kind = entry
            parsed = _parse_value(kind, raw, key)
            if parsed is None and not _nullable(name):
                raise ConfigError(f"config key {key!r} must not be empty")
            values[name] = parsed
    return validate(replace(PipelineConfig(), **values))


_NULLABLE = {"dump", "rank_list", "parallel_informal", "parallel_formal",
             "aoa_lexicon", "concreteness_lexicon", "parse_sidecar",
             "ner_sidecar", "pos_sidecar", "translation_terms", "gazetteer",
             "function_words", "annotations", "lda_alpha", "fetch_url",
             "fetch_max_posts"}

def _nullable(name: str) -> bool:
    return name in _NULLABLE


def save_config(config: PipelineConfig, path: str | Path) -> None:
    """Write every key, grouped by section, in schema order."""
    parser = configparser.ConfigParser(interpolation=None)
    for name, section, kind in _SCHEMA:
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, _format_value(kind, getattr(config, name)))
    with open(path, "w", encoding="utf-8") as handle:
        parser.write(handle)


def validate(config: PipelineConfig) -> PipelineConfig:
    """Range-check every threshold; raises ConfigError on the first violation."""
    def require(condition: bool, message: str):
        if not condition:
            raise ConfigError(f"invalid config: {message}")

    require(0.0 < config.min_share <= 0.5,
            f"min_share must be in (0, 0.5], got {config.min_share}")
    require(config.min_post_tokens >= 1, "min_post_tokens must be >= 1")
    require(config.max_quote_tokens >= 1, "max_quote_tokens must be >= 1")
    require(config.rank_cutoff >= 1, "rank_cutoff must be >= 1")
    require(config.alpha0 > 0, f"alpha0 must be positive, got {config.alpha0}")
    require(config.min_author_tokens >= 1, "min_author_tokens must be >= 1")
    require(config.min_cohort_posts >= 1, "min_cohort_posts must be >= 1")
    require(0.0 <= config.low_cs_fraction < config.high_cs_fraction <= 1.0,
            "cohort fractions must satisfy 0 <= low < high <= 1")
    require(2 <= config.t_min <= config.t_max,
            f"topic range must satisfy 2 <= t_min <= t_max, "
            f"got {config.t_min}..{config.t_max}")
    require(config.lda_alpha is None or config.lda_alpha > 0,
            "lda_alpha must be positive when set")
    require(config.lda_beta > 0, "lda_beta must be positive")
    require(config.lda_iterations >= 1, "lda_iterations must be >= 1")
    require(len(config.lda_seeds) >= 1, "lda_seeds must not be empty")
    require(config.n_partitions >= 1, "n_partitions must be >= 1")
    require(config.top_terms_n >= 1, "top_terms_n must be >= 1")
    require(config.coherence_top_n >= 2, "coherence_top_n must be >= 2")
    require(config.similarity_mode in ("avg", "max"),
            f"similarity_mode must be avg or max, got {config.similarity_mode!r}")
    require(config.fetch_page_size >= 1, "fetch_page_size must be >= 1")
    require(config.fetch_max_posts is None or config.fetch_max_posts >= 1,
            "fetch_max_posts must be >= 1 when set")
    require(len(config.partners) >= 1, "at least one partner language needed")
    require(config.seed >= 0, f"seed must be non-negative, got {config.seed}")
    return config
