import itertools

import numpy as np
import pytest

from cliqueseg.corpus import (
    CLASS,
    ROOT,
    WORD,
    GoldSegment,
    GoldSentence,
    MorphSchema,
    Paradigm,
    TaggedCorpus,
    build_stats,
    enumerate_constraints,
    sanskrit_like_schema,
)


def sentence(sid, words):
    """Sentence from (surface, lemma, class) triples, spans synthesized."""
    segs = []
    pos = 0
    for surface, lemma, cls in words:
        segs.append(GoldSegment(surface, lemma, cls, pos, pos + len(surface)))
        pos += len(surface) + 1
    return GoldSentence(sid, " ".join(w for w, _, _ in words), segs)


def triple(w):
    return (w, f"root_{w}", "noun:x=a")


class TestBuildStats:
    def test_direct_counting(self):
        corpus = TaggedCorpus(
            [
                sentence("s1", [triple("a"), triple("b")]),
                sentence("s2", [triple("a")]),
            ]
        )
        stats = build_stats(corpus)
        assert stats.count((WORD, "a")) == 2
        assert stats.count((WORD, "b")) == 1
        assert stats.joint((WORD, "a"), (WORD, "b")) == 1
        assert stats.p_co((WORD, "b"), (WORD, "a")) == 0.5

    def test_self_cooccurrence_is_one(self):
        corpus = TaggedCorpus([sentence("s1", [triple("w")])])
        stats = build_stats(corpus)
        assert stats.p_co((WORD, "w"), (WORD, "w")) == 1.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_stats(TaggedCorpus([]))

    def test_sentence_without_segments_rejected(self):
        with pytest.raises(ValueError):
            build_stats(TaggedCorpus([GoldSentence("s", "raw", [])]))

    def test_matches_brute_force_recount(self):
        # independent oracle: recount every conditional by per-sentence set
        # intersections over a random 50-sentence corpus
        rng = np.random.default_rng(123)
        words = [f"w{i}" for i in range(12)]
        lemmas = [f"l{i}" for i in range(6)]
        classes = ["noun:x=a", "noun:x=b", "verb:y=a"]
        sentences = []
        for s in range(50):
            n = rng.integers(1, 6)
            ws = [
                (
                    words[rng.integers(len(words))],
                    lemmas[rng.integers(len(lemmas))],
                    classes[rng.integers(len(classes))],
                )
                for _ in range(n)
            ]
            sentences.append(sentence(f"s{s}", ws))
        corpus = TaggedCorpus(sentences)
        stats = build_stats(corpus)

        def values_of(sent):
            out = set()
            for g in sent.segments:
                out |= {(WORD, g.surface), (ROOT, g.lemma), (CLASS, g.morph_class)}
            return out

        all_values = sorted(set().union(*map(values_of, sentences)))
        for a in all_values:
            expect_a = sum(a in values_of(s) for s in sentences)
            assert stats.count(a) == expect_a
            for b in all_values:
                expect_ab = sum(
                    a in values_of(s) and b in values_of(s) for s in sentences
                )
                assert stats.joint(b, a) == expect_ab
                p = stats.p_co(b, a)
                assert 0.0 <= p <= 1.0
                if expect_a:
                    assert p == pytest.approx(expect_ab / expect_a)

    def test_pairwise_symmetry_and_bounds(self):
        rng = np.random.default_rng(5)
        sentences = [
            sentence(
                f"s{i}",
                [triple(f"w{rng.integers(8)}") for _ in range(rng.integers(1, 5))],
            )
            for i in range(30)
        ]
        stats = build_stats(TaggedCorpus(sentences))
        for (a, b), c in stats.pairwise.items():
            assert stats.joint(a, b) == stats.joint(b, a) == c
            assert 0 <= c <= min(stats.count(a), stats.count(b))


class TestConstraints:
    def test_toy_schema_exhaustive(self):
        schema = MorphSchema(
            [Paradigm("p", (("c1", ("x", "y")), ("c2", ("u", "v"))))]
        )
        cset = enumerate_constraints(schema)
        # 4 complete + 4 partial
        assert len(cset) == 8
        assert sum(c.complete for c in cset.constraints) == 4
        assert sum(not c.complete for c in cset.constraints) == 4

    def test_empty_schema_rejected(self):
        with pytest.raises(ValueError):
            enumerate_constraints(MorphSchema([]))

    def test_sanskrit_like_total_is_528(self):
        cset = enumerate_constraints(sanskrit_like_schema())
        assert len(cset) == 528

    def test_partial_evidence_is_sum_of_member_classes(self):
        # brute-force expansion: the members of a partial constraint are
        # exactly the classes agreeing with it on the assigned categories
        schema = sanskrit_like_schema()
        cset = enumerate_constraints(schema)
        class_names = schema.class_names()
        for gid, constraint in enumerate(cset.constraints):
            if constraint.complete:
                assert cset.members[gid] == [constraint.name]
                continue
            want = dict(constraint.assignment)
            expected = []
            for cls in class_names:
                if not cls.startswith(constraint.paradigm + ":"):
                    continue
                parts = dict(
                    p.split("=", 1) for p in cls.split(":", 1)[1].split("|")
                )
                if all(parts.get(c) == v for c, v in want.items()):
                    expected.append(cls)
            assert cset.members[gid] == expected
            assert len(expected) >= 1

    def test_genitive_masculine_style_expansion(self):
        # a two-category partial over a three-category paradigm denotes
        # exactly the classes differing in the remaining category
        schema = sanskrit_like_schema()
        cset = enumerate_constraints(schema)
        target = next(
            (gid, c)
            for gid, c in enumerate(cset.constraints)
            if c.paradigm == "noun"
            and dict(c.assignment).keys() == {"case", "gender"}
            and dict(c.assignment)["case"] == "c6"
            and dict(c.assignment)["gender"] == "masc"
        )
        gid, c = target
        assert len(cset.members[gid]) == 3  # one per number value

    def test_bare_paradigm_single_class(self):
        schema = MorphSchema([Paradigm("indecl")])
        cset = enumerate_constraints(schema)
        assert len(cset) == 1
        assert cset.constraints[0].complete
        assert cset.members[0] == ["indecl"]
