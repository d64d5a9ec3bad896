"""Stage-wise pipeline runner with manifest-backed resumption.

Stages run in a fixed order: pool, project, cluster, pools, select,
report. Each stage writes byte-stable artifacts under the output
directory and records their hashes in the manifest; a completed stage
whose artifacts still hash-match is loaded instead of re-executed.
Artifacts carry no timestamps and floats are written with repr, so a
fixed seed reproduces files byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from exsel.corpus import (
    CorpusDocument,
    Example,
    LabelSchema,
    load_examples,
    sample_chunks,
    save_examples,
    split_dataset,
)
from exsel.evolve import Gene, Genome, RunTrace, evolve
from exsel.fitness import (
    evaluate_genome_llm,
    evaluate_genome_surrogate,
    make_surrogate_provider,
    render_fewshot_block,
    resolve_examples,
)
from exsel.generate import generate_pool
from exsel.llm.cache import EmbeddingCache
from exsel.llm.client import HttpTransport, LLMClient
from exsel.llm.mock import HashingEmbeddingTransport
from exsel.llm.transport import ClientError, Transport
from exsel.pipeline.baselines import baseline_random, baseline_zeroshot
from exsel.pipeline.config import MODE_LLM, MODE_SURROGATE, ConfigError, PipelineConfig
from exsel.pipeline.manifest import RunManifest
from exsel.reduce.density import cluster
from exsel.reduce.pooling import CandidatePool, ClusteredPool, build_pool, filter_noise
from exsel.reduce.projection import METHOD_PRECOMPUTED, project
from exsel.seeding import derive_seed

STAGES = ("pool", "project", "cluster", "pools", "select", "report")

_SURROGATE_EMBED_DIM = 32
_SURROGATE_EMBED_MODEL = "char-ngram-hash-32"

TRACE_HEADER = ("generation", "mean_fitness", "best_fitness", "diversity", "p_inter", "evaluations")


class PipelineError(RuntimeError):
    """A stage failed for a reason other than bad config or a client error."""


@dataclass
class RunState:
    """Everything a later stage needs from earlier ones, plus lazy clients."""

    config: PipelineConfig
    root: Path
    manifest: RunManifest
    transport_override: Transport | None = None
    candidates: list[Example] = field(default_factory=list)
    validation: list[Example] = field(default_factory=list)
    projected: np.ndarray | None = None
    assignment: np.ndarray | None = None
    filtered: ClusteredPool | None = None
    candidate_pools: dict[int, CandidatePool] = field(default_factory=dict)
    best_genomes: dict[int, Genome] = field(default_factory=dict)
    best_fitness: dict[int, float] = field(default_factory=dict)
    traces: dict[int, RunTrace] = field(default_factory=dict)
    executed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    _embed_client: LLMClient | None = None
    _chat_client: LLMClient | None = None

    def embedding_client(self) -> LLMClient:
        if self._embed_client is None:
            transport = self.transport_override
            if transport is None:
                if self.config.fitness_mode == MODE_SURROGATE:
                    transport = HashingEmbeddingTransport(dimension=_SURROGATE_EMBED_DIM)
                else:
                    transport = HttpTransport(self.config.transport)
            cache_path = self.config.embedding_cache or str(self.root / "cache" / "embeddings.jsonl")
            cache = EmbeddingCache(cache_path)
            self._embed_client = LLMClient(transport, self.config.transport, embedding_cache=cache)
        return self._embed_client

    def chat_client(self) -> LLMClient:
        if self._chat_client is None:
            transport = self.transport_override
            if transport is None:
                transport = HttpTransport(self.config.transport)
            self._chat_client = LLMClient(transport, self.config.transport)
        return self._chat_client

    def embedding_model_name(self) -> str:
        if self.config.fitness_mode == MODE_SURROGATE and self.transport_override is None:
            return _SURROGATE_EMBED_MODEL
        return self.config.embedding_model or _SURROGATE_EMBED_MODEL

    def schema(self) -> LabelSchema:
        return LabelSchema.from_examples(list(self.candidates) + list(self.validation))

    def fitness_provider(self, pool: CandidatePool) -> Callable[[Genome], float]:
        cfg = self.config
        if cfg.fitness_mode == MODE_SURROGATE:
            return make_surrogate_provider(pool, derive_seed(cfg.seed, "surrogate"))
        schema = self.schema()
        client = self.chat_client()

        def fitness(genome: Genome) -> float:
            return evaluate_genome_llm(
                genome,
                pool,
                self.validation,
                client,
                model=cfg.chat_model,
                schema=schema,
                instruction_template=cfg.instruction_template,
                max_output_tokens=cfg.max_eval_output_tokens,
            ).fitness

        return fitness


def _write_json(path: Path, payload: object) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _write_matrix(path: Path, matrix: np.ndarray) -> None:
    lines = ["\t".join(repr(float(v)) for v in row) for row in matrix]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_matrix(path: Path) -> np.ndarray:
    rows = [
        [float(tok) for tok in line.split("\t")]
        for line in path.read_text(encoding="utf-8").splitlines()
        if line
    ]
    return np.asarray(rows, dtype=float)


# ---------------------------------------------------------------- pool

def _pool_run(state: RunState) -> list[Path]:
    cfg = state.config
    out = state.root / "pool"
    out.mkdir(parents=True, exist_ok=True)
    report = None
    if cfg.corpus.pool_path is not None:
        examples = load_examples(cfg.corpus.pool_path)
    else:
        assert cfg.generation is not None  # enforced by config validation
        chunks: list[str] = []
        for index, doc_path in enumerate(cfg.corpus.documents):
            doc = CorpusDocument.from_file(doc_path, cfg.corpus.chunk_size)
            chunks.extend(sample_chunks(doc, cfg.corpus.n_chunks, derive_seed(cfg.seed, "chunks", index)))
        examples, report = generate_pool(
            cfg.generation,
            chunks,
            state.chat_client(),
            model=cfg.chat_model,
            seed=derive_seed(cfg.seed, "generate"),
        )
    split = split_dataset(examples, cfg.corpus.n_validation, derive_seed(cfg.seed, "split"))
    state.candidates = list(split.candidates)
    state.validation = list(split.validation)
    save_examples(state.candidates, out / "candidates.jsonl")
    save_examples(state.validation, out / "validation.jsonl")
    artifacts = [out / "candidates.jsonl", out / "validation.jsonl"]
    if report is not None:
        _write_json(out / "generation_report.json", report.as_dict())
        artifacts.append(out / "generation_report.json")
    return artifacts


def _pool_load(state: RunState) -> None:
    out = state.root / "pool"
    state.candidates = load_examples(out / "candidates.jsonl")
    state.validation = load_examples(out / "validation.jsonl")


# ---------------------------------------------------------------- project

def _project_run(state: RunState) -> list[Path]:
    cfg = state.config
    if not state.candidates:
        raise PipelineError("no candidate examples to project")
    out = state.root / "reduce"
    out.mkdir(parents=True, exist_ok=True)
    if cfg.projection.method == METHOD_PRECOMPUTED:
        # imported vectors replace embeddings entirely; validate count and
        # width without spending embedding calls
        placeholder = np.zeros((len(state.candidates), cfg.projection.target_dimension))
        state.projected = project(placeholder, cfg.projection)
    else:
        texts = [ex.text for ex in state.candidates]
        vectors = state.embedding_client().embed_batch(state.embedding_model_name(), texts)
        state.projected = project(vectors, cfg.projection)
    path = out / "projection.tsv"
    _write_matrix(path, state.projected)
    return [path]


def _project_load(state: RunState) -> None:
    state.projected = _read_matrix(state.root / "reduce" / "projection.tsv")
    if state.projected.shape[0] != len(state.candidates):
        raise PipelineError("projection artifact does not match the candidate pool")


# ---------------------------------------------------------------- cluster

def _cluster_run(state: RunState) -> list[Path]:
    assert state.projected is not None
    labels = cluster(state.projected, state.config.clustering)
    state.assignment = labels
    out = state.root / "reduce"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "assignment.tsv"
    lines = ["id\tcluster"]
    lines.extend(f"{ex.id}\t{int(label)}" for ex, label in zip(state.candidates, labels))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [path]


def _cluster_load(state: RunState) -> None:
    path = state.root / "reduce" / "assignment.tsv"
    lines = path.read_text(encoding="utf-8").splitlines()
    labels = [int(line.rsplit("\t", 1)[1]) for line in lines[1:] if line]
    if len(labels) != len(state.candidates):
        raise PipelineError("assignment artifact does not match the candidate pool")
    state.assignment = np.asarray(labels, dtype=int)


# ---------------------------------------------------------------- pools

def _pools_run(state: RunState) -> list[Path]:
    assert state.assignment is not None
    cfg = state.config
    state.filtered = filter_noise(state.candidates, state.assignment)
    out = state.root / "pools"
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    for k in cfg.pool_sizes:
        pool = build_pool(state.filtered, k)
        state.candidate_pools[k] = pool
        payload = {
            "k": k,
            "n_clusters": pool.n_clusters,
            "selected": [
                {
                    "index": index,
                    "id": pool.examples[index].id,
                    "cluster": int(state.filtered.assignment[index]),
                }
                for index in pool.selected
            ],
        }
        path = out / f"pool_k{k}.json"
        _write_json(path, payload)
        artifacts.append(path)
    return artifacts


def _pools_load(state: RunState) -> None:
    assert state.assignment is not None
    cfg = state.config
    state.filtered = filter_noise(state.candidates, state.assignment)
    for k in cfg.pool_sizes:
        path = state.root / "pools" / f"pool_k{k}.json"
        payload = json.loads(path.read_text(encoding="utf-8"))
        selected = tuple(entry["index"] for entry in payload["selected"])
        pool = CandidatePool(source=state.filtered, selected=selected, k=k)
        for entry in payload["selected"]:
            if pool.examples[entry["index"]].id != entry["id"]:
                raise PipelineError(f"pool artifact pool_k{k}.json does not match the candidate pool")
        state.candidate_pools[k] = pool


# ---------------------------------------------------------------- select

def _select_run(state: RunState) -> list[Path]:
    cfg = state.config
    out = state.root / "select"
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    for k in cfg.pool_sizes:
        pool = state.candidate_pools[k]
        ga_cfg = dataclasses.replace(cfg.ga, seed=derive_seed(cfg.seed, "select", k))
        best, trace = evolve(pool, state.fitness_provider(pool), ga_cfg)
        state.best_genomes[k] = best
        state.traces[k] = trace
        state.best_fitness[k] = trace.records[-1].best_fitness

        trace_path = out / f"trace_k{k}.tsv"
        lines = ["\t".join(TRACE_HEADER)]
        for generation, mean_fit, best_fit, div, p_inter, evals in trace.as_rows():
            lines.append(
                f"{generation}\t{repr(mean_fit)}\t{repr(best_fit)}\t{repr(div)}\t{repr(p_inter)}\t{evals}"
            )
        trace_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

        examples = resolve_examples(best, pool)
        genome_path = out / f"best_genome_k{k}.json"
        _write_json(
            genome_path,
            {
                "k": k,
                "fitness": state.best_fitness[k],
                "genes": [{"cluster": gene.cluster, "example": gene.example} for gene in best],
                "example_ids": [ex.id for ex in examples],
            },
        )
        prompt_path = out / f"prompt_k{k}.txt"
        prompt_path.write_text(render_fewshot_block(examples) + "\n", encoding="utf-8")
        artifacts.extend([trace_path, genome_path, prompt_path])
    return artifacts


def _select_load(state: RunState) -> None:
    for k in state.config.pool_sizes:
        path = state.root / "select" / f"best_genome_k{k}.json"
        payload = json.loads(path.read_text(encoding="utf-8"))
        genome = tuple(Gene(entry["cluster"], entry["example"]) for entry in payload["genes"])
        state.best_genomes[k] = genome
        state.best_fitness[k] = float(payload["fitness"])


# ---------------------------------------------------------------- report

def _report_run(state: RunState) -> list[Path]:
    cfg = state.config
    out = state.root / "report"
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    test_examples = None
    if cfg.fitness_mode == MODE_LLM and cfg.corpus.test_path is not None:
        test_examples = load_examples(cfg.corpus.test_path)
    for k in cfg.pool_sizes:
        pool = state.candidate_pools[k]
        best = state.best_genomes[k]
        if cfg.fitness_mode == MODE_SURROGATE:
            payload = {
                "k": k,
                "mode": MODE_SURROGATE,
                "fitness": evaluate_genome_surrogate(best, pool, derive_seed(cfg.seed, "surrogate")),
                "distinct_clusters": len({gene.cluster for gene in best}),
                "genome_length": len(best),
                "example_ids": [ex.id for ex in resolve_examples(best, pool)],
            }
        else:
            eval_set = test_examples if test_examples is not None else state.validation
            evaluation = evaluate_genome_llm(
                best,
                pool,
                eval_set,
                state.chat_client(),
                model=cfg.chat_model,
                schema=state.schema(),
                instruction_template=cfg.instruction_template,
                max_output_tokens=cfg.max_eval_output_tokens,
            )
            payload = {
                "k": k,
                "mode": MODE_LLM,
                "evaluated_on": "test" if test_examples is not None else "validation",
                "fitness": evaluation.fitness,
                "n_unparseable": evaluation.n_unparseable,
                "metrics": evaluation.report.as_dict(),
            }
        path = out / f"metrics_k{k}.json"
        _write_json(path, payload)
        artifacts.append(path)
    return artifacts


def _report_load(state: RunState) -> None:
    return None


_STAGE_FNS: dict[str, tuple[Callable[[RunState], list[Path]], Callable[[RunState], None]]] = {
    "pool": (_pool_run, _pool_load),
    "project": (_project_run, _project_load),
    "cluster": (_cluster_run, _cluster_load),
    "pools": (_pools_run, _pools_load),
    "select": (_select_run, _select_load),
    "report": (_report_run, _report_load),
}


def run_pipeline(
    config: PipelineConfig,
    *,
    through: str = "report",
    force: bool = False,
    transport: Transport | None = None,
    log: Callable[[str], None] | None = None,
) -> RunState:
    """Run stages up to and including `through`, resuming where possible.

    Client errors and config errors propagate unchanged; any other stage
    failure is wrapped in PipelineError naming the stage.
    """
    if through not in STAGES:
        raise ValueError(f"unknown stage {through!r}; expected one of {STAGES}")
    root = Path(config.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.load_or_create(root, config.config_hash())
    state = RunState(config=config, root=root, manifest=manifest, transport_override=transport)
    for stage in STAGES:
        run_fn, load_fn = _STAGE_FNS[stage]
        if not force and manifest.can_skip(stage):
            load_fn(state)
            state.skipped.append(stage)
            if log:
                log(f"[skip] {stage}")
        else:
            start = time.perf_counter()
            try:
                artifacts = run_fn(state)
            except (ClientError, ConfigError, PipelineError):
                raise
            except Exception as exc:
                raise PipelineError(f"stage {stage} failed: {exc}") from exc
            seconds = time.perf_counter() - start
            manifest.record_stage(stage, artifacts, seconds)
            manifest.save()
            state.executed.append(stage)
            if log:
                log(f"[run ] {stage} ({seconds:.2f}s)")
        if stage == through:
            break
    manifest.save()
    return state


def run_baselines(
    config: PipelineConfig,
    *,
    transport: Transport | None = None,
    log: Callable[[str], None] | None = None,
) -> dict:
    """Random-draw (and, in llm mode, zero-shot) reference scores per pool size.

    Reuses completed stages through pool construction, then writes
    baseline/baselines.json. Not a manifest stage: reruns overwrite.
    """
    state = run_pipeline(config, through="pools", transport=transport, log=log)
    cfg = state.config
    payload: dict = {"mode": cfg.fitness_mode, "n_draws": cfg.baseline_draws, "random": {}}
    for k in cfg.pool_sizes:
        pool = state.candidate_pools[k]
        summary = baseline_random(
            pool,
            cfg.ga.genome_length,
            cfg.baseline_draws,
            state.fitness_provider(pool),
            derive_seed(cfg.seed, "baseline", k),
        )
        payload["random"][str(k)] = summary.as_dict()
    if cfg.fitness_mode == MODE_LLM:
        evaluation = baseline_zeroshot(
            state.validation,
            state.chat_client(),
            model=cfg.chat_model,
            schema=state.schema(),
            instruction_template=cfg.instruction_template,
            max_output_tokens=cfg.max_eval_output_tokens,
        )
        payload["zeroshot"] = {
            "fitness": evaluation.fitness,
            "n_unparseable": evaluation.n_unparseable,
            "metrics": evaluation.report.as_dict(),
        }
    out = state.root / "baseline"
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "baselines.json", payload)
    return payload
