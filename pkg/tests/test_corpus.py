from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from watchbench import corpus
from watchbench.corpus import CorpusError

from helpers.synthetic import make_items


def item_line(qid="q1", answer="B", category="CW", n_options=5) -> str:
    labels = ["A", "B", "C", "D", "E"][:n_options]
    return json.dumps(
        {
            "question_id": qid,
            "video_id": "v1",
            "question": "what is happening?",
            "options": {label: f"opt {label}" for label in labels},
            "answer": answer,
            "category_code": category,
        }
    )


class TestLoadItems:
    def test_empty_file_gives_empty_list(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text("")
        assert corpus.load_items(path) == []

    def test_single_valid_line(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text(item_line() + "\n")
        items = corpus.load_items(path)
        assert len(items) == 1
        assert items[0].answer == "B"
        assert items[0].group == "Causal"

    def test_four_options_rejected_naming_missing_label(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text(item_line(n_options=4) + "\n")
        with pytest.raises(CorpusError, match="E"):
            corpus.load_items(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text(item_line() + "\n{not json\n")
        with pytest.raises(CorpusError, match="line 2"):
            corpus.load_items(path)

    def test_duplicate_question_id_rejected(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text(item_line() + "\n" + item_line() + "\n")
        with pytest.raises(CorpusError, match="duplicate"):
            corpus.load_items(path)

    def test_unknown_category_rejected(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text(item_line(category="XX") + "\n")
        with pytest.raises(CorpusError, match="category"):
            corpus.load_items(path)

    def test_answer_must_be_option_label(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text(item_line(answer="F") + "\n")
        with pytest.raises(CorpusError, match="answer"):
            corpus.load_items(path)

    def test_save_then_load_is_identity(self, tmp_path):
        items = make_items(per_group=4, seed=3)
        path = tmp_path / "items.jsonl"
        corpus.save_items(items, path)
        assert corpus.load_items(path) == items


class TestGroupOf:
    @pytest.mark.parametrize(
        "code,group",
        [
            ("CW", "Causal"),
            ("CH", "Causal"),
            ("TN", "Temporal"),
            ("TC", "Temporal"),
            ("TP", "Temporal"),
            ("DO", "Descriptive"),
            ("DL", "Descriptive"),
            ("DC", "Descriptive"),
        ],
    )
    def test_taxonomy_mapping(self, code, group):
        assert corpus.group_of(code) == group

    def test_unknown_code_raises(self):
        with pytest.raises(CorpusError):
            corpus.group_of("XX")

    def test_groups_partition_the_eight_codes(self):
        all_codes = set()
        for codes in corpus.CATEGORY_GROUPS.values():
            assert not (all_codes & codes)
            all_codes |= codes
        assert all_codes == corpus.VALID_CATEGORY_CODES
        assert len(all_codes) == 8


class TestFreezeStratified:
    def test_per_group_zero_gives_empty(self):
        frozen = corpus.freeze_stratified(make_items(3), per_group=0, seed=1)
        assert frozen.ids == ()

    def test_exact_supply_selects_everything(self):
        items = make_items(per_group=3, seed=2)
        frozen = corpus.freeze_stratified(items, per_group=3, seed=1)
        assert sorted(frozen.ids) == sorted(i.question_id for i in items)
        by_id = corpus.items_by_id(items)
        for group in corpus.GROUP_ORDER:
            assert sum(1 for qid in frozen.ids if by_id[qid].group == group) == 3

    def test_insufficient_group_named_in_error(self):
        items = [i for i in make_items(per_group=5) if i.group != "Temporal"]
        items += [i for i in make_items(per_group=5) if i.group == "Temporal"][:2]
        with pytest.raises(CorpusError, match="Temporal"):
            corpus.freeze_stratified(items, per_group=5, seed=1)

    def test_repeat_calls_byte_identical(self):
        items = make_items(per_group=20, seed=9)
        a = corpus.freeze_stratified(items, per_group=10, seed=42)
        b = corpus.freeze_stratified(items, per_group=10, seed=42)
        assert a.to_json() == b.to_json()

    def test_different_seeds_differ(self):
        items = make_items(per_group=50, seed=9)
        a = corpus.freeze_stratified(items, per_group=10, seed=1)
        b = corpus.freeze_stratified(items, per_group=10, seed=2)
        assert a.ids != b.ids

    def test_ids_distinct(self):
        items = make_items(per_group=20, seed=9)
        frozen = corpus.freeze_stratified(items, per_group=10, seed=0)
        assert len(set(frozen.ids)) == len(frozen.ids) == 30

    @given(per_group=st.integers(min_value=0, max_value=12), seed=st.integers(0, 2**31))
    def test_determinism_property(self, per_group, seed):
        items = make_items(per_group=12, seed=5)
        a = corpus.freeze_stratified(items, per_group, seed)
        b = corpus.freeze_stratified(items, per_group, seed)
        assert a == b

    def test_save_load_round_trip(self, tmp_path):
        items = make_items(per_group=6, seed=4)
        frozen = corpus.freeze_stratified(items, per_group=4, seed=11)
        path = tmp_path / "item_ids.json"
        corpus.save_frozen_list(frozen, path)
        assert corpus.load_frozen_list(path) == frozen
        corpus.save_frozen_list(corpus.load_frozen_list(path), path)
        assert corpus.load_frozen_list(path) == frozen
