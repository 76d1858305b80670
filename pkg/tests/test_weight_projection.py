"""Tests for per-token weights and their projection onto subword shards."""

import json
import math
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from gaze2weights.adapters.demo_tokenizer import DemoTokenizer, split_shards
from gaze2weights.adapters.shard_file_tokenizer import ShardFileTokenizer
from gaze2weights.core.artifacts import (
    AblationConfig,
    AttentionMask,
    BetaPrior,
    PseudoExample,
    PseudoGram,
    PseudoPath,
    SaliencePriorSet,
    ShardMap,
)
from gaze2weights.core.entities import SessionMode
from gaze2weights.core.taxonomy import LOOP, OTHER, VARIABLE_DECLARATION
from gaze2weights.exceptions import ProjectionException
from gaze2weights.services.weight_projection_service import (
    WeightProjectionService,
    assemble_ast_weights,
    gram_frequencies,
    project_shards,
    token_weight,
)

TAXONOMY = (VARIABLE_DECLARATION, LOOP, OTHER)
PAIR = (VARIABLE_DECLARATION, LOOP)
SINGLE = (VARIABLE_DECLARATION,)


@pytest.fixture
def priors():
    mode = SessionMode.COMBINED
    return SaliencePriorSet(
        priors={
            (VARIABLE_DECLARATION, mode): BetaPrior(3.0, 1.0, VARIABLE_DECLARATION, mode),
            (LOOP, mode): BetaPrior(1.0, 1.0, LOOP, mode),
            (OTHER, mode): BetaPrior(1.0, 3.0, OTHER, mode),
        },
        pooled={mode: BetaPrior(5.0, 5.0)},
        counts={},
        taxonomy=TAXONOMY,
    )


@pytest.fixture
def pseudo_path():
    return PseudoPath((PseudoGram(PAIR, 3, (0, 1)), PseudoGram(SINGLE, 0, (3,))))


@pytest.fixture
def freqs():
    return Counter({PAIR: 2, SINGLE: 1})


class TestTokenWeight:
    """Per-token weight formula."""

    def test_rarest_gram_weight(self):
        assert abs(token_weight(3.0, 0, 0.5) - (3.0 + 1.0 / math.log(2.0) + 0.5)) <= 1e-12

    def test_bonuses_can_be_switched_off(self):
        assert token_weight(3.0, 4, 0.5, use_rarity=False) == pytest.approx(3.5)
        assert token_weight(3.0, 4, 0.5, use_salience=False) == pytest.approx(3.0 + 1.0 / math.log(6.0))

    def test_negative_frequency_raises(self):
        with pytest.raises(ProjectionException, match="nonnegative"):
            token_weight(3.0, -1, 0.5)


class TestAssembleAstWeights:
    """Weights of the tokens covered by a pseudo path."""

    def test_covered_tokens_get_bonuses_and_others_keep_base(self, pseudo_path, freqs, priors):
        weights = assemble_ast_weights(pseudo_path, freqs, priors, token_count=5)

        expected = [
            3.0 + 1.0 / math.log(4.0) + 0.75,
            3.0 + 1.0 / math.log(4.0) + 0.5,
            3.0,
            3.0 + 1.0 / math.log(3.0) + 0.75,
            3.0,
        ]
        assert weights == pytest.approx(expected, abs=1e-12)

    def test_monogram_ablation_leaves_single_grams_at_base(self, pseudo_path, freqs, priors):
        ablation = AblationConfig(use_monograms=False)

        weights = assemble_ast_weights(pseudo_path, freqs, priors, token_count=5, ablation=ablation)

        assert weights[3] == 3.0
        assert weights[0] > 3.0

    def test_frequencies_pool_over_paths(self, pseudo_path):
        freqs = gram_frequencies([pseudo_path, pseudo_path, PseudoPath()])

        assert freqs == Counter({PAIR: 2, SINGLE: 2})

    def test_gram_missing_from_frequencies_raises(self, pseudo_path, priors):
        with pytest.raises(ProjectionException, match="absent from the frequency table"):
            assemble_ast_weights(pseudo_path, Counter({PAIR: 1}), priors, token_count=5)

    def test_doubly_covered_token_raises(self, freqs, priors):
        path = PseudoPath((PseudoGram(PAIR, 3, (0, 1)), PseudoGram(SINGLE, 0, (0,))))

        with pytest.raises(ProjectionException, match="more than one gram"):
            assemble_ast_weights(path, freqs, priors, token_count=2)

    def test_class_disagreement_with_map_raises(self, pseudo_path, freqs, priors, token_map_factory):
        token_map = token_map_factory([LOOP, LOOP, OTHER, VARIABLE_DECLARATION], taxonomy=TAXONOMY)

        with pytest.raises(ProjectionException, match="disagrees"):
            assemble_ast_weights(pseudo_path, freqs, priors, token_map=token_map)

    def test_token_count_is_required(self, pseudo_path, freqs, priors):
        with pytest.raises(ProjectionException, match="token count"):
            assemble_ast_weights(pseudo_path, freqs, priors)


class TestProjectShards:
    """Length law and per-token constancy."""

    def test_length_and_constancy_on_random_shard_maps(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            n = int(rng.integers(1, 40))
            counts = [int(count) for count in rng.integers(1, 5, size=n)]
            offset = int(rng.integers(0, 10))
            shard_map = ShardMap.from_counts(counts, offset)
            ast_weights = rng.uniform(3.0, 5.0, size=n)

            vector = project_shards(ast_weights, shard_map)

            assert len(vector) == sum(counts) == shard_map.total
            assert vector.offset == offset
            for token_id, slots in enumerate(shard_map.slots):
                for slot in slots:
                    assert vector.weights[slot - offset] == ast_weights[token_id]

    def test_token_count_mismatch_raises(self):
        with pytest.raises(ProjectionException, match="inconsistent"):
            project_shards([3.0, 3.0], ShardMap.from_counts([1, 2, 1]))

    def test_token_without_shards_is_rejected(self):
        with pytest.raises(ProjectionException, match="no shards"):
            ShardMap(((0,), ()))

    def test_non_contiguous_slots_are_rejected(self):
        with pytest.raises(ProjectionException, match="contiguous"):
            ShardMap(((0,), (2, 3)))


class TestShardTokenizers:
    """Demo and file-backed shard maps."""

    @pytest.mark.parametrize(
        "text,shards",
        [
            ("getValue", ["get", "Value"]),
            ("HTTPServer", ["HTTP", "Server"]),
            ("max_value", ["max", "_", "value"]),
            ("x1", ["x", "1"]),
            ("(", ["("]),
        ],
    )
    def test_split_shards(self, text, shards):
        assert split_shards(text) == shards

    def test_demo_tokenizer_counts_shards_per_token(self, token_map_factory):
        token_map = token_map_factory([OTHER, OTHER], taxonomy=TAXONOMY)

        shard_map = DemoTokenizer(offset=4).shard_map(token_map)

        # build_token_map names tokens "t0", "t1"
        assert shard_map.slots == ((4, 5), (6, 7))

    def test_file_tokenizer_reads_per_example_maps(self, tmp_path: Path, token_map_factory):
        target = tmp_path / "shards.json"
        target.write_text(json.dumps({"0": {"0": [0], "1": [1, 2]}}))
        token_map = token_map_factory([OTHER, OTHER], taxonomy=TAXONOMY)
        tokenizer = ShardFileTokenizer(target)

        assert tokenizer.shard_map(token_map, 0).slots == ((0,), (1, 2))
        with pytest.raises(ProjectionException, match="No shard map for example 1"):
            tokenizer.shard_map(token_map, 1)

    def test_file_tokenizer_checks_coverage(self, tmp_path: Path, token_map_factory):
        target = tmp_path / "shards.json"
        target.write_text(json.dumps({"0": [0]}))
        token_map = token_map_factory([OTHER, OTHER], taxonomy=TAXONOMY)

        with pytest.raises(ProjectionException, match="does not cover"):
            ShardFileTokenizer(target).shard_map(token_map)


class TestWeightProjectionService:
    """End-to-end projection and the weights file."""

    def test_project_examples_and_round_trip(self, tmp_path: Path, pseudo_path, priors):
        example = PseudoExample(
            example_id=0,
            rho=0.6,
            mask=AttentionMask(bits=(1, 1, 0, 1, 0), rho=0.6, m=3),
            path=pseudo_path,
        )
        shard_maps = {0: ShardMap.from_counts([2, 1, 1, 3, 1])}
        service = WeightProjectionService(w_base=3.0)

        vectors = service.project_examples([example], priors, shard_maps, SessionMode.COMBINED)
        target = tmp_path / "weights.jsonl"
        service.save_weights(vectors, target)
        loaded = WeightProjectionService.load_weights(target)

        assert len(vectors[0]) == 8
        assert vectors[0].weights[0] == vectors[0].weights[1]
        assert vectors[0].weights[3] == 3.0
        assert np.array_equal(loaded[0].weights, vectors[0].weights)
        assert loaded[0].offset == 0

    def test_missing_shard_map_raises(self, pseudo_path, priors):
        example = PseudoExample(7, 0.6, AttentionMask(bits=(1, 1, 0, 1), rho=0.6, m=3), pseudo_path)

        with pytest.raises(ProjectionException, match="No shard map for example 7"):
            WeightProjectionService().project_examples([example], priors, {}, SessionMode.COMBINED)

    def test_negative_base_weight_is_rejected(self):
        with pytest.raises(ProjectionException, match="w_base"):
            WeightProjectionService(w_base=-1.0)
