"""Tests for transition counting, pruning, normalization and the n-gram index."""

import json
from collections import defaultdict
from pathlib import Path

import pytest

from gaze2weights.core.entities import PathEntry, ScanPath, SessionMode
from gaze2weights.core.taxonomy import (
    ARGUMENT,
    CONDITIONAL_STATEMENT,
    DEFAULT_TAXONOMY,
    FUNCTION_CALL,
    FUNCTION_DECLARATION,
    LOOP,
    OTHER,
    PARAMETER,
    VARIABLE_DECLARATION,
)
from gaze2weights.exceptions import TransitionException
from gaze2weights.services.transition_service import (
    TransitionService,
    build_index,
    build_tables,
    conditional_probs,
    count_ngrams,
    ngrams,
    prune,
)


def path_of(tokens, mode=SessionMode.READING):
    return ScanPath(mode, tuple(PathEntry(index, token) for index, token in enumerate(tokens)))


TABLE_BIGRAMS = {
    (FUNCTION_DECLARATION, VARIABLE_DECLARATION): 8399,
    (CONDITIONAL_STATEMENT, LOOP): 6026,
    (FUNCTION_CALL, VARIABLE_DECLARATION): 2468,
    (PARAMETER, VARIABLE_DECLARATION): 2219,
    (ARGUMENT, FUNCTION_CALL): 1179,
}
TABLE_TRIGRAMS = {
    (FUNCTION_DECLARATION, PARAMETER, VARIABLE_DECLARATION): 1634,
    (CONDITIONAL_STATEMENT, FUNCTION_DECLARATION, PARAMETER): 1199,
    (FUNCTION_CALL, FUNCTION_DECLARATION, VARIABLE_DECLARATION): 655,
    (ARGUMENT, FUNCTION_CALL, VARIABLE_DECLARATION): 557,
    (FUNCTION_CALL, PARAMETER, VARIABLE_DECLARATION): 241,
}


def replay_paths(token_map):
    """Three-token paths for every trigram, topped up with two-token paths so each listed bigram hits its count."""
    token_of = {token.semantic_class: token.id for token in token_map.tokens}
    paths = []
    covered = defaultdict(int)
    for gram, count in TABLE_TRIGRAMS.items():
        paths += [path_of([token_of[label] for label in gram])] * count
        covered[gram[:2]] += count
        covered[gram[1:]] += count
    for gram, count in TABLE_BIGRAMS.items():
        paths += [path_of([token_of[label] for label in gram])] * (count - covered[gram])
    return paths


@pytest.fixture
def four_class_map(token_map_factory):
    return token_map_factory([VARIABLE_DECLARATION, LOOP, FUNCTION_CALL, OTHER])


@pytest.fixture
def branching_paths():
    """Five visits of VD->LOOP->CALL and four of VD->CALL."""
    return [path_of([0, 1, 2]) for _ in range(5)] + [path_of([0, 2]) for _ in range(4)]


class TestCounting:
    """Raw n-gram counts."""

    def test_sliding_windows(self):
        assert ngrams(["a", "b", "c", "d"], 3) == [("a", "b", "c"), ("b", "c", "d")]
        assert ngrams(["a"], 2) == []

    def test_counts_span_each_path_only(self, branching_paths, four_class_map):
        c2, c3 = count_ngrams(branching_paths, four_class_map)

        assert c2[(VARIABLE_DECLARATION, LOOP)] == 5
        assert c2[(VARIABLE_DECLARATION, FUNCTION_CALL)] == 4
        assert c2[(LOOP, FUNCTION_CALL)] == 5
        # no bigram bridges the end of one path and the start of the next
        assert (FUNCTION_CALL, VARIABLE_DECLARATION) not in c2
        assert c3 == {(VARIABLE_DECLARATION, LOOP, FUNCTION_CALL): 5}


class TestPruning:
    """Threshold pruning before normalization."""

    def test_count_at_threshold_survives_and_below_is_dropped(self, branching_paths, four_class_map):
        tables = build_tables(branching_paths, four_class_map, threshold=5)

        assert tables.has_bigram((VARIABLE_DECLARATION, LOOP))
        assert not tables.has_bigram((VARIABLE_DECLARATION, FUNCTION_CALL))
        assert tables.p2[(VARIABLE_DECLARATION, LOOP)] == pytest.approx(1.0)
        assert tables.has_trigram((VARIABLE_DECLARATION, LOOP, FUNCTION_CALL))

    def test_unpruned_probabilities_follow_counts(self, branching_paths, four_class_map):
        tables = build_tables(branching_paths, four_class_map, threshold=1)

        assert tables.p2[(VARIABLE_DECLARATION, LOOP)] == pytest.approx(5 / 9)
        assert tables.p2[(VARIABLE_DECLARATION, FUNCTION_CALL)] == pytest.approx(4 / 9)
        assert tables.p2[(LOOP, FUNCTION_CALL)] == pytest.approx(1.0)

    def test_invalid_threshold_raises(self):
        with pytest.raises(TransitionException, match=">= 1"):
            prune({("a", "b"): 3}, threshold=0)
        with pytest.raises(TransitionException):
            TransitionService(DEFAULT_TAXONOMY, prune_threshold=0)

    def test_replayed_corpus_keeps_every_listed_entry(self, token_map_factory):
        token_map = token_map_factory(list(DEFAULT_TAXONOMY))
        c2, c3 = count_ngrams(replay_paths(token_map), token_map)

        assert c2[(FUNCTION_DECLARATION, VARIABLE_DECLARATION)] == 8399
        assert {gram: c2[gram] for gram in TABLE_BIGRAMS} == TABLE_BIGRAMS
        assert {gram: c3[gram] for gram in TABLE_TRIGRAMS} == TABLE_TRIGRAMS

        tables = build_tables(replay_paths(token_map), token_map, threshold=5)
        assert min(c3[gram] for gram in TABLE_TRIGRAMS) == 241
        assert all(tables.has_bigram(gram) for gram in TABLE_BIGRAMS)
        assert all(tables.has_trigram(gram) for gram in TABLE_TRIGRAMS)


class TestNormalization:
    """Each context's surviving probabilities sum to one."""

    def test_contexts_sum_to_one(self, scan_paths, small_token_map):
        tables = build_tables(scan_paths, small_token_map, threshold=1)

        for table in (tables.p2, tables.p3):
            totals = defaultdict(float)
            for gram, prob in table.items():
                totals[gram[:-1]] += prob
            assert totals
            for total in totals.values():
                assert abs(total - 1.0) <= 1e-9

    def test_bigram_probability_is_the_count_share_of_its_context(self):
        p2, p3 = conditional_probs({("A", "B"): 8399, ("A", "C"): 2601}, {})

        assert p2[("A", "B")] == pytest.approx(0.763545454545, abs=1e-12)
        assert p2[("A", "C")] == pytest.approx(2601 / 11000)
        assert p3 == {}


class TestIndex:
    """Global n-gram index ordering."""

    def test_monograms_then_sorted_bigrams_then_sorted_trigrams(self, scan_paths, small_token_map):
        tables = build_tables(scan_paths, small_token_map, threshold=1)

        index = build_index(DEFAULT_TAXONOMY, tables.p2, tables.p3)

        grams = index.grams()
        assert grams[:8] == [(label,) for label in DEFAULT_TAXONOMY]
        assert grams[8 : 8 + len(tables.p2)] == sorted(tables.p2)
        assert grams[8 + len(tables.p2) :] == sorted(tables.p3)
        assert [index.index_of(gram) for gram in grams] == list(range(len(grams)))

    def test_unknown_gram_raises(self):
        index = build_index(DEFAULT_TAXONOMY, {}, {})

        with pytest.raises(TransitionException, match="not in the index"):
            index.index_of((LOOP, LOOP))


class TestTransitionService:
    """Per-mode fitting and the tables file."""

    def test_modes_are_fitted_from_their_own_sessions(self, scan_paths, small_token_map):
        fitted = TransitionService(DEFAULT_TAXONOMY).fit_modes(scan_paths, small_token_map)

        reading, reading_index = fitted[SessionMode.READING]
        assert reading.c2 == {}
        assert len(reading_index) == len(DEFAULT_TAXONOMY)

        writing, _ = fitted[SessionMode.WRITING]
        assert writing.c2 == {(VARIABLE_DECLARATION, LOOP): 6, (LOOP, VARIABLE_DECLARATION): 5}
        assert writing.c3 == {
            (LOOP, VARIABLE_DECLARATION, LOOP): 5,
            (VARIABLE_DECLARATION, LOOP, VARIABLE_DECLARATION): 5,
        }

        combined, _ = fitted[SessionMode.COMBINED]
        assert combined.c2[(VARIABLE_DECLARATION, LOOP)] == 9

    def test_save_and_load(self, tmp_path: Path, scan_paths, small_token_map):
        service = TransitionService(DEFAULT_TAXONOMY)
        fitted = service.fit_modes(scan_paths, small_token_map)
        target = tmp_path / "tables.json"

        service.save(fitted, target)
        loaded = TransitionService.load(target)

        for mode, (tables, index) in fitted.items():
            loaded_tables, loaded_index = loaded[mode]
            assert loaded_index == index
            assert loaded_tables.c2 == tables.c2
            assert loaded_tables.c3 == tables.c3
            assert loaded_tables.p2 == pytest.approx(tables.p2)

    def test_unknown_mode_in_file_raises(self, tmp_path: Path):
        target = tmp_path / "tables.json"
        target.write_text(json.dumps({"dreaming": {"index": []}}))

        with pytest.raises(TransitionException, match="Unknown session mode"):
            TransitionService.load(target)
