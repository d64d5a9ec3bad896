"""Shared fixtures: synthetic topic pools whose hashed-ngram embeddings cluster cleanly."""

import random

import pytest
import yaml

from exsel.corpus import Example, save_examples

TOPIC_VOCAB = [
    ["glacier", "moraine", "crevasse", "icefall", "serac", "firn", "ablation", "bergschrund"],
    ["sonata", "allegro", "crescendo", "arpeggio", "cadenza", "legato", "tremolo", "fugue"],
    ["enzyme", "substrate", "kinase", "peptide", "ligand", "catalysis", "isomer", "residue"],
    ["voltage", "capacitor", "inductor", "resistor", "impedance", "rectifier", "oscillator", "transistor"],
    ["monsoon", "cyclone", "isobar", "humidity", "frontal", "convection", "drizzle", "anticyclone"],
    ["basalt", "magma", "stratum", "sediment", "erosion", "tectonic", "obsidian", "caldera"],
    ["neuron", "synapse", "axon", "dendrite", "myelin", "cortex", "glia", "plasticity"],
    ["orbit", "perigee", "apogee", "telemetry", "thruster", "payload", "docking", "reentry"],
    ["ledger", "audit", "invoice", "accrual", "liability", "dividend", "equity", "amortize"],
    ["sourdough", "levain", "crumb", "proofing", "hydration", "autolyse", "scoring", "banneton"],
    ["regatta", "spinnaker", "halyard", "tacking", "leeward", "mainsail", "rudder", "keel"],
    ["pixel", "shader", "raster", "viewport", "texture", "antialias", "framebuffer", "mipmap"],
]


def make_topic_examples(n_topics: int, per_topic: int, seed: int, words_per_text: int = 12) -> list[Example]:
    """Examples in `n_topics` lexical topics; same-topic texts share vocabulary.

    Character-ngram embeddings of these texts separate by topic, so the
    density clusterer recovers the topics. Every fourth example is a
    negative (empty entities).
    """
    if n_topics > len(TOPIC_VOCAB):
        raise ValueError(f"at most {len(TOPIC_VOCAB)} topics available")
    rng = random.Random(seed)
    examples = []
    uid = 0
    for topic in range(n_topics):
        vocab = TOPIC_VOCAB[topic]
        for i in range(per_topic):
            words = rng.choices(vocab, k=words_per_text)
            text = " ".join(words) + f" item {uid:05d}"
            entities = {} if i % 4 == 3 else {"term": [words[0]]}
            examples.append(
                Example(id=f"t{topic:02d}-{i:04d}", text=text, entities=entities, provenance="synthetic")
            )
            uid += 1
    return examples


@pytest.fixture(scope="session")
def small_pool_path(tmp_path_factory):
    """360 examples in 12 topics; clusters at the default parameters."""
    path = tmp_path_factory.mktemp("smallpool") / "pool.jsonl"
    save_examples(make_topic_examples(12, 30, seed=7), path)
    return path


def write_yaml_config(path, payload: dict):
    path.write_text(yaml.safe_dump(payload, sort_keys=False), encoding="utf-8")
    return path


def surrogate_config_payload(pool_path, default_output_dir, **overrides) -> dict:
    """A small, fast surrogate-mode config; overrides merge one level deep."""
    payload = {
        "seed": 7,
        "output_dir": str(default_output_dir),
        "fitness_mode": "surrogate",
        "corpus": {"pool_path": str(pool_path), "n_validation": 24},
        "projection": {"target_dimension": 20},
        "clustering": {"min_cluster_size": 9, "min_samples": 1, "cluster_selection_epsilon": 0.18},
        "pool_sizes": [40, 120],
        "ga": {
            "mu": 12,
            "lambda": 24,
            "max_generations": 6,
            "genome_length": 5,
            "warmup": 2,
            "patience": 2,
        },
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(payload.get(key), dict):
            payload[key] = {**payload[key], **value}
        else:
            payload[key] = value
    return payload
