"""Histogram, n-gram vocabulary, and feature vector assembly."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pglot.errors import EmptyCorpus
from pglot.features import (
    FeatureSpec,
    byte_histogram,
    featurize,
    featurize_matrix,
    ngram_vocab,
)
from pglot.formats import ALL_FORMATS, FormatId
from pglot.synth import synth_donor


def brute_count(data: bytes, gram: bytes) -> int:
    return sum(1 for i in range(len(data) - len(gram) + 1) if data[i:i + len(gram)] == gram)


class TestByteHistogram:
    def test_empty_is_all_zero(self):
        assert byte_histogram(b"").sum() == 0

    def test_byte_ramp_unnormalized(self):
        h = byte_histogram(bytes(range(256)), normalize=False)
        assert (h == 1).all()

    def test_direct_count(self):
        h = byte_histogram(b"aaab", normalize=False)
        assert h[0x61] == 3 and h[0x62] == 1 and h.sum() == 4

    def test_normalized_sums_to_one(self):
        h = byte_histogram(b"aaab")
        assert abs(h.sum() - 1.0) < 1e-12


class TestNgramVocab:
    def test_abab_k2(self):
        spec = ngram_vocab([b"abab"], 2)
        assert spec.vocab == (b"ab", b"ba")  # "ab" twice, then ties by (len, bytes)

    def test_aaaa_k3_smaller_vocab(self):
        spec = ngram_vocab([b"aaaa"], 3)
        assert spec.vocab == (b"aa", b"aaa")

    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpus):
            ngram_vocab([b"", b""], 4)

    def test_order_of_samples_is_irrelevant(self):
        docs = [synth_donor(FormatId.PHP, i, 400) for i in range(4)]
        assert ngram_vocab(docs, 64).vocab == ngram_vocab(docs[::-1], 64).vocab

    def test_counts_match_bruteforce_on_corpus_files(self):
        docs = [synth_donor(FormatId.PNG, i, 300) for i in range(3)]
        docs += [synth_donor(FormatId.JS, i, 300) for i in range(3)]
        spec = ngram_vocab(docs, 40)
        for data in docs:
            vec = featurize(data, spec)
            for j, gram in enumerate(spec.vocab):
                assert vec.ngrams[j] == brute_count(data, gram), (gram, data[:40])


class TestFeaturize:
    def test_empty_input(self):
        spec = FeatureSpec((b"ab", b"abc"))
        vec = featurize(b"", spec)
        assert vec.hist.sum() == 0
        assert vec.mime[-1] == 1.0 and vec.mime.sum() == 1.0  # UNKNOWN slot
        assert vec.ngrams.sum() == 0

    def test_png_mime_slot(self):
        spec = FeatureSpec((b"ab",))
        data = synth_donor(FormatId.PNG, 2, 400)
        vec = featurize(data, spec)
        assert vec.mime[ALL_FORMATS.index(FormatId.PNG)] == 1.0
        assert vec.mime.sum() == 1.0

    def test_hand_counted_ngrams(self):
        spec = FeatureSpec((b"ab", b"ba"), normalize_hist=False)
        vec = featurize(b"abab", spec)
        assert vec.ngrams.tolist() == [2.0, 1.0]

    def test_concat_layout(self):
        spec = FeatureSpec((b"ab", b"xyz"))
        vec = featurize(b"abab", spec)
        flat = vec.concat()
        assert flat.shape == (256 + 13 + 2,)
        assert flat.shape[0] == spec.dim

    def test_matrix_agrees_with_single(self):
        spec = FeatureSpec((b"ab", b"ba", b"abc"))
        docs = [b"abab", b"abcabc", b""]
        mat = featurize_matrix(docs, spec)
        for i, d in enumerate(docs):
            assert np.array_equal(mat[i], featurize(d, spec).concat())

    @settings(max_examples=40, deadline=None)
    @given(st.binary(min_size=0, max_size=300), st.binary(min_size=1, max_size=40))
    def test_appending_never_decreases_counts(self, data, extra):
        spec = FeatureSpec((b"ab", b"ba", b"abc", b"cab"), normalize_hist=False)
        before = featurize(data, spec)
        after = featurize(data + extra, spec)
        assert (after.ngrams >= before.ngrams).all()
        assert (after.hist >= before.hist).all()


class TestSpecValidation:
    def test_duplicate_entries_rejected(self):
        with pytest.raises(ValueError):
            FeatureSpec((b"ab", b"ab"))

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            FeatureSpec((b"a",))
