"""Pipeline configuration: one YAML file drives every stage.

Secrets never live in the file: the client reads its token from the
environment variable named by `client.api_key_env`, and any string
value may interpolate `${VAR}` from the environment. One global seed
fans out to per-stage seeds salted by stage name, so stages are
independently reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from exsel.evolve import GAConfig
from exsel.generate import GenerationConfig
from exsel.llm.transport import TransportConfig
from exsel.reduce.density import ClusteringParams
from exsel.reduce.projection import ProjectionConfig, ProjectionError
from exsel.templates import (
    EXTRACTION_INSTRUCTION_TEMPLATE,
    NEGATIVE_GENERATION_TEMPLATE,
    POSITIVE_GENERATION_TEMPLATE,
    load_template,
)

MODE_SURROGATE = "surrogate"
MODE_LLM = "llm"

_ENV_PATTERN = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


class ConfigError(ValueError):
    """Invalid or inconsistent pipeline configuration."""


@dataclass(frozen=True)
class CorpusConfig:
    documents: tuple[str, ...] = ()
    pool_path: str | None = None
    test_path: str | None = None
    n_validation: int = 1000
    chunk_size: int = 800
    n_chunks: int = 64

    def __post_init__(self) -> None:
        if self.n_validation < 0:
            raise ConfigError("corpus.n_validation must be >= 0")
        if self.chunk_size < 1 or self.n_chunks < 1:
            raise ConfigError("corpus.chunk_size and corpus.n_chunks must be >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    output_dir: str
    seed: int = 0
    fitness_mode: str = MODE_SURROGATE
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    generation: GenerationConfig | None = None
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    clustering: ClusteringParams = field(default_factory=ClusteringParams)
    pool_sizes: tuple[int, ...] = (500, 5000)
    ga: GAConfig = field(default_factory=GAConfig)
    transport: TransportConfig = field(default_factory=TransportConfig)
    chat_model: str = ""
    embedding_model: str = ""
    embedding_cache: str | None = None
    instruction_template: str = EXTRACTION_INSTRUCTION_TEMPLATE
    baseline_draws: int = 3
    max_eval_output_tokens: int = 512

    def __post_init__(self) -> None:
        if self.fitness_mode not in (MODE_SURROGATE, MODE_LLM):
            raise ConfigError(f"fitness_mode must be surrogate or llm, got {self.fitness_mode!r}")
        if not self.pool_sizes:
            raise ConfigError("pool_sizes must list at least one k")
        if any(k < 1 for k in self.pool_sizes):
            raise ConfigError("pool sizes must be >= 1")
        if len(set(self.pool_sizes)) != len(self.pool_sizes):
            raise ConfigError("pool_sizes contains duplicates")
        if self.baseline_draws < 1:
            raise ConfigError("baseline_draws must be >= 1")
        object.__setattr__(self, "pool_sizes", tuple(self.pool_sizes))
        self.validate()

    def validate(self) -> None:
        if self.corpus.pool_path is None and not self.corpus.documents:
            raise ConfigError("corpus needs either pool_path or documents")
        if self.fitness_mode == MODE_SURROGATE and self.corpus.pool_path is None:
            raise ConfigError("surrogate mode cannot generate examples; corpus.pool_path is required")
        if self.fitness_mode == MODE_LLM:
            if not self.chat_model:
                raise ConfigError("llm mode requires client.chat_model")
            if self.corpus.n_validation < 1:
                raise ConfigError("llm mode requires corpus.n_validation >= 1")
        if self.corpus.pool_path is None and self.generation is None:
            raise ConfigError("generation section is required when generating from documents")
        for path in self._referenced_paths():
            if not Path(path).exists():
                raise ConfigError(f"referenced path does not exist: {path}")

    def _referenced_paths(self) -> list[str]:
        paths = list(self.corpus.documents)
        for candidate in (self.corpus.pool_path, self.corpus.test_path, self.projection.precomputed_path):
            if candidate:
                paths.append(candidate)
        return paths

    def snapshot(self) -> dict:
        """Config as plain data, used for hashing and for the manifest."""
        raw = dataclasses.asdict(self)
        raw.pop("output_dir")
        return raw

    def config_hash(self) -> str:
        canonical = json.dumps(self.snapshot(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _interpolate_env(node: object) -> object:
    if isinstance(node, str):
        def substitute(match: re.Match) -> str:
            name = match.group(1)
            if name not in os.environ:
                raise ConfigError(f"environment variable {name} is not set (referenced in config)")
            return os.environ[name]

        return _ENV_PATTERN.sub(substitute, node)
    if isinstance(node, list):
        return [_interpolate_env(item) for item in node]
    if isinstance(node, dict):
        return {key: _interpolate_env(value) for key, value in node.items()}
    return node


def _resolve(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else base / path)


def _build_generation(section: dict, base: Path) -> GenerationConfig:
    data = dict(section)
    positive_path = _resolve(base, data.pop("positive_template_path", None))
    negative_path = _resolve(base, data.pop("negative_template_path", None))
    data["positive_prompt_template"] = load_template(positive_path, POSITIVE_GENERATION_TEMPLATE)
    data["negative_prompt_template"] = load_template(negative_path, NEGATIVE_GENERATION_TEMPLATE)
    if "labels" in data:
        data["labels"] = tuple(data["labels"])
    try:
        return GenerationConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"generation: {exc}") from exc


def _build_ga(section: dict) -> GAConfig:
    data = dict(section)
    if "lambda" in data:
        data["lambda_"] = data.pop("lambda")
    try:
        return GAConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"ga: {exc}") from exc


def load_config(path: Path | str) -> PipelineConfig:
    """Parse, env-interpolate, and validate a pipeline config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    raw = _interpolate_env(raw)
    base = path.parent
    return config_from_dict(raw, base)


def config_from_dict(raw: dict, base: Path) -> PipelineConfig:
    data = dict(raw)
    unknown = set(data) - {
        "seed", "output_dir", "fitness_mode", "corpus", "generation", "projection",
        "clustering", "pool_sizes", "ga", "client", "evaluation", "baseline_draws",
    }
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    if "output_dir" not in data:
        raise ConfigError("output_dir is required")

    corpus_raw = dict(data.get("corpus", {}))
    corpus_raw["documents"] = tuple(
        _resolve(base, doc) for doc in corpus_raw.get("documents", [])
    )
    for key in ("pool_path", "test_path"):
        corpus_raw[key] = _resolve(base, corpus_raw.get(key))
    try:
        corpus = CorpusConfig(**corpus_raw)
    except TypeError as exc:
        raise ConfigError(f"corpus: {exc}") from exc

    generation = None
    if "generation" in data and data["generation"] is not None:
        generation = _build_generation(data["generation"], base)

    projection_raw = dict(data.get("projection", {}))
    projection_raw["precomputed_path"] = _resolve(base, projection_raw.get("precomputed_path"))
    try:
        projection = ProjectionConfig(**projection_raw)
    except (TypeError, ProjectionError) as exc:
        raise ConfigError(f"projection: {exc}") from exc

    try:
        clustering = ClusteringParams(**data.get("clustering", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"clustering: {exc}") from exc

    ga = _build_ga(data.get("ga", {}))

    client_raw = dict(data.get("client", {}))
    chat_model = client_raw.pop("chat_model", "")
    embedding_model = client_raw.pop("embedding_model", "")
    embedding_cache = _resolve(base, client_raw.pop("embedding_cache", None))
    try:
        transport = TransportConfig(**client_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"client: {exc}") from exc

    evaluation_raw = dict(data.get("evaluation", {}))
    instruction_path = _resolve(base, evaluation_raw.pop("instruction_template_path", None))
    instruction = load_template(instruction_path, EXTRACTION_INSTRUCTION_TEMPLATE)
    max_eval_tokens = evaluation_raw.pop("max_output_tokens", 512)
    if evaluation_raw:
        raise ConfigError(f"evaluation: unknown fields {sorted(evaluation_raw)}")

    try:
        return PipelineConfig(
            output_dir=_resolve(base, data["output_dir"]),
            seed=int(data.get("seed", 0)),
            fitness_mode=data.get("fitness_mode", MODE_SURROGATE),
            corpus=corpus,
            generation=generation,
            projection=projection,
            clustering=clustering,
            pool_sizes=tuple(data.get("pool_sizes", (500, 5000))),
            ga=ga,
            transport=transport,
            chat_model=chat_model,
            embedding_model=embedding_model,
            embedding_cache=embedding_cache,
            instruction_template=instruction,
            baseline_draws=int(data.get("baseline_draws", 3)),
            max_eval_output_tokens=int(max_eval_tokens),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
