import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from komem.corpus import gen_adversarial, gen_pharma
from komem.embed import (
    DimensionMismatch,
    HashEmbedder,
    KTooLarge,
    build_index,
    cosine,
    load_index,
    save_index,
    top_k,
)

RNG = np.random.Generator(np.random.PCG64(7))


@pytest.fixture(scope="module")
def embedder():
    return HashEmbedder()


class TestHashEmbedder:
    def test_deterministic(self, embedder):
        text = "Compound DRG-0042 shows activity against Target TGT-017"
        assert np.array_equal(embedder.embed(text), embedder.embed(text))

    def test_unit_norm(self, embedder):
        vec = embedder.embed("erlotinib inhibits egfr")
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-6
        assert abs(cosine(vec, vec) - 1.0) < 1e-6

    def test_dimension_default_384(self, embedder):
        assert embedder.d == 384
        assert embedder.embed("x").shape == (384,)

    def test_dimension_floor(self):
        with pytest.raises(ValueError):
            HashEmbedder(d=8)

    def test_near_duplicates_close_unrelated_far(self, embedder):
        # pair differing only in year and value digits
        a = embedder.embed("A 2019 phase 2 trial showed Erlotinib inhibits EGFR with IC50 of 10nM")
        b = embedder.embed("A 2020 phase 2 trial showed Erlotinib inhibits EGFR with IC50 of 20nM")
        assert cosine(a, b) > 0.8
        # unrelated facts from the scaling corpus (different ids and assay)
        u = embedder.embed(
            "Compound DRG-0042 shows activity against Target TGT-017 with Binding Affinity of 47.3 nM"
        )
        v = embedder.embed(
            "Compound DRG-7311 shows activity against Target TGT-482 with Ki of 12.9 nM"
        )
        assert cosine(u, v) < 0.5

    def test_adversarial_corpus_bit_identical_twice(self, embedder):
        docs = [d.text for d in gen_adversarial(seed=42).docs]
        first = embedder.embed_batch(docs)
        second = embedder.embed_batch(docs)
        assert first.shape == (40, 384)
        assert np.array_equal(first, second)

    def test_empty_text_is_zero_vector(self, embedder):
        assert np.allclose(embedder.embed(""), 0.0)

    def test_function_form_matches_provider(self, embedder):
        from komem.embed import embed_hash

        text = "Compound DRG-1234 shows activity"
        assert np.array_equal(embed_hash(text), embedder.embed(text))
        assert embed_hash(text, d=64).shape == (64,)


class TestCosine:
    def test_self_similarity(self):
        v = RNG.normal(size=16)
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthonormal_basis(self):
        e1, e2 = np.eye(16)[0], np.eye(16)[1]
        assert cosine(e1, e2) == 0.0

    def test_hand_value(self):
        a = np.array([1.0, 0.0])
        b = np.array([np.sqrt(0.5), np.sqrt(0.5)])
        assert cosine(a, b) == pytest.approx(0.7071067811865476, abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine(np.ones(3), np.ones(4))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=100)
    def test_symmetry(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        a, b = rng.normal(size=12), rng.normal(size=12)
        assert cosine(a, b) == pytest.approx(cosine(b, a), abs=1e-12)


class TestTopK:
    def _random_index(self, n, d=24, seed=0):
        rng = np.random.Generator(np.random.PCG64(seed))
        vecs = rng.normal(size=(n, d))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        from komem.embed import CorpusIndex

        return CorpusIndex(vectors=vecs, doc_ids=[f"d{i:03d}" for i in range(n)],
                           provider_id="test")

    def test_k_equals_n_is_permutation(self):
        index = self._random_index(20)
        result = top_k(index, index.vectors[3], 20)
        assert sorted(doc_id for doc_id, _ in result) == sorted(index.doc_ids)

    def test_stored_doc_ranks_first(self):
        index = self._random_index(50)
        result = top_k(index, index.vectors[17], 5)
        assert result[0][0] == "d017"
        assert result[0][1] == pytest.approx(1.0, abs=1e-9)

    def test_scores_non_increasing(self):
        index = self._random_index(50, seed=3)
        result = top_k(index, RNG.normal(size=24), 50)
        scores = [s for _, s in result]
        assert scores == sorted(scores, reverse=True)

    def test_k_too_large(self):
        index = self._random_index(5)
        with pytest.raises(KTooLarge):
            top_k(index, index.vectors[0], 6)
        with pytest.raises(KTooLarge):
            top_k(index, index.vectors[0], 0)

    def test_tie_break_by_doc_id(self):
        from komem.embed import CorpusIndex

        vecs = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        index = CorpusIndex(vectors=vecs, doc_ids=["b", "a", "c"], provider_id="t")
        result = top_k(index, np.array([1.0, 0.0]), 2)
        assert [doc_id for doc_id, _ in result] == ["a", "b"]

    def test_agreement_with_brute_force_oracle(self):
        # oracle: full sort of every cosine, 200 random corpora
        for trial in range(200):
            rng = np.random.Generator(np.random.PCG64(trial))
            n = int(rng.integers(5, 40))
            index = self._random_index(n, seed=trial + 1)
            query = rng.normal(size=24)
            query /= np.linalg.norm(query)
            k = int(rng.integers(1, n + 1))
            expected = sorted(
                ((cosine(query, index.vectors[i]), index.doc_ids[i]) for i in range(n)),
                key=lambda pair: (-pair[0], pair[1]),
            )[:k]
            got = top_k(index, query, k)
            assert [doc_id for doc_id, _ in got] == [doc_id for _, doc_id in expected]
            for (_, score), (escore, _) in zip(got, expected):
                assert score == pytest.approx(escore, abs=1e-9)


class TestIndexCache:
    def test_round_trip(self, tmp_path, embedder):
        facts = gen_pharma(50, 42)
        index = build_index([f.sentence for f in facts], embedder,
                            [f.doc_id for f in facts])
        save_index(index, tmp_path / "cache.bin")
        loaded = load_index(tmp_path / "cache.bin")
        assert loaded.doc_ids == index.doc_ids
        assert loaded.provider_id == index.provider_id
        # float32 storage: row cosine survives within 1e-6
        for row in range(len(index)):
            assert cosine(loaded.vectors[row], index.vectors[row]) > 1 - 1e-6

    def test_rejects_non_index_file(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not an index")
        with pytest.raises(ValueError):
            load_index(path)
