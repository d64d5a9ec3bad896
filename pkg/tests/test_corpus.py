"""Tests for the example data model, JSONL round-trips, splits, and chunking."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exsel.corpus import (
    CorpusDocument,
    DatasetError,
    DatasetSplit,
    Example,
    LabelSchema,
    example_from_record,
    example_to_record,
    load_examples,
    sample_chunks,
    save_examples,
    split_dataset,
)

labels_st = st.sampled_from(["person", "org", "location", "date"])
values_st = st.frozensets(st.text(alphabet="abcdef XYZ", min_size=1, max_size=8).filter(str.strip), max_size=3)
entities_st = st.dictionaries(labels_st, values_st, max_size=3)


def example_st(ident: str) -> st.SearchStrategy[Example]:
    return st.builds(
        Example,
        id=st.just(ident),
        text=st.text(min_size=1, max_size=40).filter(lambda s: s),
        entities=entities_st,
        provenance=st.sampled_from(["synthetic", "human"]),
    )


class TestExample:
    def test_entities_are_frozen_sets(self):
        ex = Example(id="a", text="x", entities={"person": ["Ann", "Ann", "Bo"]})
        assert ex.entities == {"person": frozenset({"Ann", "Bo"})}

    def test_rejects_empty_text(self):
        with pytest.raises(DatasetError):
            Example(id="a", text="")

    def test_rejects_empty_id(self):
        with pytest.raises(DatasetError):
            Example(id="", text="x")

    def test_rejects_blank_entity_value(self):
        with pytest.raises(DatasetError):
            Example(id="a", text="x", entities={"person": ["  "]})

    def test_rejects_unknown_provenance(self):
        with pytest.raises(DatasetError):
            Example(id="a", text="x", provenance="oracle")

    def test_is_positive(self):
        assert Example(id="a", text="x", entities={"person": ["Ann"]}).is_positive
        assert not Example(id="b", text="x").is_positive


class TestLabelSchema:
    def test_rejects_duplicates(self):
        with pytest.raises(DatasetError):
            LabelSchema(("a", "a"))

    def test_from_examples_first_seen_order(self):
        exs = [
            Example(id="1", text="x", entities={"org": ["A"]}),
            Example(id="2", text="y", entities={"person": ["B"], "org": ["C"]}),
        ]
        assert LabelSchema.from_examples(exs).labels == ("org", "person")

    def test_from_examples_requires_some_labels(self):
        with pytest.raises(DatasetError):
            LabelSchema.from_examples([Example(id="1", text="x")])


class TestJsonlRoundTrip:
    @settings(max_examples=60)
    @given(examples=st.lists(st.integers(0, 10_000), min_size=1, max_size=8, unique=True).flatmap(
        lambda ids: st.tuples(*(example_st(f"ex-{i}") for i in ids))
    ))
    def test_round_trip_preserves_examples(self, tmp_path_factory, examples):
        path = tmp_path_factory.mktemp("rt") / "examples.jsonl"
        save_examples(examples, path)
        assert load_examples(path) == list(examples)

    def test_missing_entities_defaults_to_empty(self):
        ex = example_from_record({"id": "a", "text": "x"})
        assert ex.entities == {}

    def test_record_serialization_sorted(self):
        ex = Example(id="a", text="x", entities={"org": ["b", "a"]})
        rec = example_to_record(ex)
        assert rec["entities"] == {"org": ["a", "b"]}

    def test_load_reports_line_number_for_bad_json(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n{nope\n', encoding="utf-8")
        with pytest.raises(DatasetError, match=r"bad\.jsonl:2"):
            load_examples(path)

    def test_load_reports_line_number_for_bad_record(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n{"id": "b", "text": ""}\n', encoding="utf-8")
        with pytest.raises(DatasetError, match=r"bad\.jsonl:2"):
            load_examples(path)

    def test_load_rejects_duplicate_ids(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        rec = json.dumps({"id": "a", "text": "x"})
        path.write_text(rec + "\n" + rec + "\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="duplicate example id"):
            load_examples(path)

    def test_load_rejects_unknown_fields(self, tmp_path):
        path = tmp_path / "extra.jsonl"
        path.write_text('{"id": "a", "text": "x", "score": 3}\n', encoding="utf-8")
        with pytest.raises(DatasetError, match="unknown fields"):
            load_examples(path)

    def test_load_skips_blank_lines(self, tmp_path):
        path = tmp_path / "blank.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n\n{"id": "b", "text": "y"}\n', encoding="utf-8")
        assert [ex.id for ex in load_examples(path)] == ["a", "b"]

    def test_non_list_entity_values_rejected(self):
        with pytest.raises(DatasetError, match="list"):
            example_from_record({"id": "a", "text": "x", "entities": {"org": "A"}})


def _numbered(n: int) -> list[Example]:
    return [Example(id=f"e{i}", text=f"text {i}") for i in range(n)]


class TestSplitDataset:
    def test_partition_is_disjoint_and_complete(self):
        examples = _numbered(20)
        split = split_dataset(examples, n_validation=6, seed=3)
        assert len(split.candidates) == 14
        assert len(split.validation) == 6
        combined = sorted(split.candidates + split.validation, key=lambda e: int(e.id[1:]))
        assert combined == examples

    def test_deterministic_per_seed(self):
        examples = _numbered(30)
        a = split_dataset(examples, n_validation=10, seed=7)
        b = split_dataset(examples, n_validation=10, seed=7)
        c = split_dataset(examples, n_validation=10, seed=8)
        assert a == b
        assert {e.id for e in a.validation} != {e.id for e in c.validation}

    def test_preserves_relative_order(self):
        examples = _numbered(25)
        split = split_dataset(examples, n_validation=9, seed=1)
        for part in (split.candidates, split.validation):
            indices = [int(e.id[1:]) for e in part]
            assert indices == sorted(indices)

    def test_rejects_validation_not_smaller_than_pool(self):
        with pytest.raises(DatasetError):
            split_dataset(_numbered(5), n_validation=5, seed=0)

    def test_test_split_is_empty(self):
        assert split_dataset(_numbered(5), n_validation=1, seed=0).test == ()

    def test_splits_reject_shared_ids(self):
        a = Example(id="a", text="x")
        with pytest.raises(DatasetError):
            DatasetSplit(candidates=(a,), validation=(a,))


class TestSampleChunks:
    def test_chunks_lie_on_offset_grid(self):
        doc = CorpusDocument(id="d", text="abcdefghij" * 37, chunk_size=16)
        windows = {doc.text[off : off + 16] for off in range(0, len(doc.text), 16)}
        for chunk in sample_chunks(doc, n=50, seed=5):
            assert chunk in windows

    def test_final_chunk_may_be_short(self):
        doc = CorpusDocument(id="d", text="abcde", chunk_size=3)
        chunks = set(sample_chunks(doc, n=64, seed=0))
        assert chunks <= {"abc", "de"}
        assert "de" in chunks

    def test_deterministic(self):
        doc = CorpusDocument(id="d", text="xyz" * 100, chunk_size=10)
        assert sample_chunks(doc, 20, seed=4) == sample_chunks(doc, 20, seed=4)

    def test_zero_count(self):
        doc = CorpusDocument(id="d", text="abc", chunk_size=2)
        assert sample_chunks(doc, 0, seed=1) == []

    def test_document_shorter_than_chunk(self):
        doc = CorpusDocument(id="d", text="ab", chunk_size=100)
        assert set(sample_chunks(doc, 10, seed=2)) == {"ab"}
