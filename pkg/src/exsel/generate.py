"""Generate stage: build a synthetic candidate pool through two prompt streams.

Positives must carry at least one entity, negatives none; the model is
asked for a JSON array of records per batch. Temperature jitters per
batch around the configured base. Parsing is strict with a tally: a
record that fails schema validation or its stream's constraint is
rejected and counted, never silently dropped. A batch whose reply does
not parse at all is retried once at the same temperature.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from exsel.corpus import DatasetError, Example
from exsel.llm.client import LLMClient
from exsel.llm.transport import ChatRequest, ClientError
from exsel.parsing import parse_json_payload
from exsel.seeding import derive_rng
from exsel.templates import (
    GENERATION_SYSTEM_PROMPT,
    NEGATIVE_GENERATION_TEMPLATE,
    POSITIVE_GENERATION_TEMPLATE,
)

logger = logging.getLogger(__name__)

POSITIVE = "positive"
NEGATIVE = "negative"

REASON_SCHEMA = "schema"
REASON_STREAM = "stream-constraint"
REASON_EXCESS = "excess"

FAILURE_PARSE = "parse-failure"
FAILURE_CLIENT = "client-error"


class GenerationError(RuntimeError):
    """No batch produced any usable example."""


@dataclass(frozen=True)
class GenerationConfig:
    n_total: int
    batch_size: int = 20
    base_temperature: float = 0.7
    temperature_jitter: float = 0.2
    positive_fraction: float = 0.5
    labels: tuple[str, ...] = ()
    positive_prompt_template: str = POSITIVE_GENERATION_TEMPLATE
    negative_prompt_template: str = NEGATIVE_GENERATION_TEMPLATE
    max_output_tokens: int = 4096

    def __post_init__(self) -> None:
        if self.n_total < 1:
            raise ValueError("n_total must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.temperature_jitter < 0 or self.base_temperature - self.temperature_jitter < 0:
            raise ValueError("base_temperature - temperature_jitter must be >= 0")
        if not 0.0 <= self.positive_fraction <= 1.0:
            raise ValueError("positive_fraction must be in [0, 1]")
        object.__setattr__(self, "labels", tuple(self.labels))


@dataclass(frozen=True)
class StreamCounts:
    parsed_ok: int = 0
    rejected: int = 0


@dataclass(frozen=True)
class GenerationReport:
    requested: int
    parsed_ok: int
    rejected: int
    rejection_reasons: Mapping[str, int] = field(default_factory=dict)
    per_stream: Mapping[str, StreamCounts] = field(default_factory=dict)
    failed_batches: int = 0
    batch_failure_reasons: Mapping[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "requested": self.requested,
            "parsed_ok": self.parsed_ok,
            "rejected": self.rejected,
            "rejection_reasons": dict(sorted(self.rejection_reasons.items())),
            "per_stream": {
                stream: {"parsed_ok": c.parsed_ok, "rejected": c.rejected}
                for stream, c in sorted(self.per_stream.items())
            },
            "failed_batches": self.failed_batches,
            "batch_failure_reasons": dict(sorted(self.batch_failure_reasons.items())),
        }


def draw_temperature(cfg: GenerationConfig, seed: int, batch_index: int) -> float:
    """Uniform in [base - jitter, base + jitter], fixed per (seed, batch index)."""
    if cfg.temperature_jitter == 0.0:
        return cfg.base_temperature
    rng = derive_rng(seed, "temperature", batch_index)
    return rng.uniform(
        cfg.base_temperature - cfg.temperature_jitter,
        cfg.base_temperature + cfg.temperature_jitter,
    )


def _plan_batches(cfg: GenerationConfig) -> list[tuple[str, int]]:
    """(stream, count) per batch: positive batches first, then negative."""
    n_positive = round(cfg.n_total * cfg.positive_fraction)
    n_negative = cfg.n_total - n_positive
    plan: list[tuple[str, int]] = []
    for stream, total in ((POSITIVE, n_positive), (NEGATIVE, n_negative)):
        remaining = total
        while remaining > 0:
            count = min(cfg.batch_size, remaining)
            plan.append((stream, count))
            remaining -= count
    return plan


def _validate_record(record: object, stream: str) -> tuple[str, dict[str, list[str]]] | str:
    """Return (text, entities) for a usable record, or a rejection reason."""
    if not isinstance(record, dict):
        return REASON_SCHEMA
    if set(record) - {"text", "entities"}:
        return REASON_SCHEMA
    text = record.get("text")
    if not isinstance(text, str) or not text.strip():
        return REASON_SCHEMA
    entities = record.get("entities", {})
    if not isinstance(entities, dict):
        return REASON_SCHEMA
    cleaned: dict[str, list[str]] = {}
    for label, values in entities.items():
        if not isinstance(label, str) or not label:
            return REASON_SCHEMA
        if not isinstance(values, list) or not all(isinstance(v, str) and v.strip() for v in values):
            return REASON_SCHEMA
        if values:
            cleaned[label] = values
    if stream == POSITIVE and not cleaned:
        return REASON_STREAM
    if stream == NEGATIVE and cleaned:
        return REASON_STREAM
    return (text.strip(), cleaned)


def generate_pool(
    cfg: GenerationConfig,
    chunks: Sequence[str],
    client: LLMClient,
    *,
    model: str,
    seed: int = 0,
) -> tuple[list[Example], GenerationReport]:
    """Produce up to cfg.n_total synthetic examples plus a full accounting.

    Chunks seed the prompts round-robin and are reused when fewer than
    the number of batches. Batches run sequentially in plan order, so a
    scripted mock client sees a deterministic request sequence.
    """
    if not chunks:
        raise ValueError("need at least one corpus chunk to seed generation")
    if not model:
        raise ValueError("model name must be non-empty")
    plan = _plan_batches(cfg)
    labels_text = ", ".join(cfg.labels)
    examples: list[Example] = []
    rejection_reasons: Counter[str] = Counter()
    batch_failures: Counter[str] = Counter()
    stream_parsed: Counter[str] = Counter()
    stream_rejected: Counter[str] = Counter()
    successful_batches = 0

    for batch_index, (stream, count) in enumerate(plan):
        template = cfg.positive_prompt_template if stream == POSITIVE else cfg.negative_prompt_template
        chunk = chunks[batch_index % len(chunks)]
        prompt = template.format(chunk=chunk, count=count, labels=labels_text)
        request = ChatRequest(
            model=model,
            system_prompt=GENERATION_SYSTEM_PROMPT,
            user_prompt=prompt,
            temperature=draw_temperature(cfg, seed, batch_index),
            max_output_tokens=cfg.max_output_tokens,
        )
        records = None
        try:
            for attempt in (0, 1):
                payload = parse_json_payload(client.chat(request))
                if isinstance(payload, list):
                    records = payload
                    break
                logger.warning("batch %d (%s): unparseable reply (attempt %d)", batch_index, stream, attempt + 1)
        except ClientError as exc:
            logger.warning("batch %d (%s) skipped: %s", batch_index, stream, exc)
            batch_failures[FAILURE_CLIENT] += 1
            continue
        if records is None:
            batch_failures[FAILURE_PARSE] += 1
            continue

        successful_batches += 1
        for position, record in enumerate(records):
            if position >= count:
                rejection_reasons[REASON_EXCESS] += 1
                stream_rejected[stream] += 1
                continue
            outcome = _validate_record(record, stream)
            if isinstance(outcome, str):
                rejection_reasons[outcome] += 1
                stream_rejected[stream] += 1
                continue
            text, entities = outcome
            example_id = f"syn-{stream[:3]}-{batch_index:03d}-{position:02d}"
            try:
                example = Example(id=example_id, text=text, entities=entities, provenance="synthetic")
            except DatasetError:
                rejection_reasons[REASON_SCHEMA] += 1
                stream_rejected[stream] += 1
                continue
            examples.append(example)
            stream_parsed[stream] += 1

    if successful_batches == 0:
        raise GenerationError(
            f"all {len(plan)} generation batches failed: {dict(batch_failures)}"
        )
    report = GenerationReport(
        requested=cfg.n_total,
        parsed_ok=len(examples),
        rejected=sum(rejection_reasons.values()),
        rejection_reasons=dict(rejection_reasons),
        per_stream={
            stream: StreamCounts(parsed_ok=stream_parsed[stream], rejected=stream_rejected[stream])
            for stream in (POSITIVE, NEGATIVE)
            if stream_parsed[stream] or stream_rejected[stream]
        },
        failed_batches=sum(batch_failures.values()),
        batch_failure_reasons=dict(batch_failures),
    )
    return examples, report
