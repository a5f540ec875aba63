"""Tagged corpora, morphological schemas, and co-occurrence statistics.

Values live in three namespaced vocabularies: inflected surface forms
(``word``), lemmas (``root``) and morphological classes (``class``).  Counts
are sentence-level and binarized: a value counts once per sentence containing
it, and a pair counts once per sentence containing both, which keeps every
conditional probability a proper probability.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field

WORD = "word"
ROOT = "root"
CLASS = "class"
KINDS = (WORD, ROOT, CLASS)


@dataclass(frozen=True)
class GoldSegment:
    surface: str
    lemma: str
    morph_class: str
    start: int
    end: int


@dataclass
class GoldSentence:
    sentence_id: str
    raw: str
    segments: list[GoldSegment]


@dataclass
class TaggedCorpus:
    sentences: list[GoldSentence]

    @property
    def vocab_w(self) -> set[str]:
        return {seg.surface for s in self.sentences for seg in s.segments}

    @property
    def vocab_r(self) -> set[str]:
        return {seg.lemma for s in self.sentences for seg in s.segments}

    @property
    def vocab_m(self) -> set[str]:
        return {seg.morph_class for s in self.sentences for seg in s.segments}


# ---------------------------------------------------------------------------
# morphological schema and constraint enumeration


@dataclass(frozen=True)
class Paradigm:
    """A part-of-speech group: a product of grammatical categories.

    ``categories`` maps category name to its ordered value tuple.  A paradigm
    with no categories is a single bare class named after the paradigm.
    """

    name: str
    categories: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def class_names(self) -> list[str]:
        if not self.categories:
            return [self.name]
        names = []
        for values in itertools.product(*(vals for _, vals in self.categories)):
            parts = [f"{cat}={val}" for (cat, _), val in zip(self.categories, values)]
            names.append(self.name + ":" + "|".join(parts))
        return names


@dataclass
class MorphSchema:
    paradigms: list[Paradigm]

    def class_names(self) -> list[str]:
        out = []
        for p in self.paradigms:
            out.extend(p.class_names())
        return out

    def coarse_pos(self, class_name: str) -> str:
        return class_name.split(":", 1)[0]

    def fingerprint(self) -> str:
        blob = json.dumps(
            [[p.name, [[c, list(v)] for c, v in p.categories]] for p in self.paradigms],
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class MorphConstraint:
    """A complete or partial combination of category values within a paradigm.

    ``assignment`` fixes a value for a subset of the paradigm's categories;
    fixing all of them makes the constraint complete (an actual class).
    """

    paradigm: str
    assignment: tuple[tuple[str, str], ...]
    complete: bool

    @property
    def name(self) -> str:
        if not self.assignment:
            return self.paradigm
        return self.paradigm + ":" + "|".join(f"{c}={v}" for c, v in self.assignment)


@dataclass
class MorphConstraintSet:
    schema: MorphSchema
    constraints: list[MorphConstraint]
    # constraint index -> member class names (singleton for complete ones)
    members: list[list[str]]

    def __len__(self) -> int:
        return len(self.constraints)

    def fingerprint(self) -> str:
        blob = json.dumps(
            [self.schema.fingerprint()] + [c.name for c in self.constraints],
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def enumerate_constraints(schema: MorphSchema) -> MorphConstraintSet:
    """All complete classes plus all partial category-value combinations.

    A partial combination denotes every class of its paradigm that agrees with
    it on the assigned categories; its corpus evidence is the sum of the
    evidence of those classes.  Combinations across paradigms (which can never
    form a class) are not generated.
    """
    if not schema.paradigms:
        raise ValueError("empty morphological schema")
    constraints: list[MorphConstraint] = []
    members: list[list[str]] = []
    for p in schema.paradigms:
        if not p.categories:
            constraints.append(MorphConstraint(p.name, (), complete=True))
            members.append([p.name])
            continue
        cat_names = [c for c, _ in p.categories]
        all_classes = p.class_names()
        n_cats = len(cat_names)
        for mask in range(1, 2 ** n_cats):
            chosen = [i for i in range(n_cats) if mask >> i & 1]
            pools = [p.categories[i][1] for i in chosen]
            for values in itertools.product(*pools):
                assignment = tuple(
                    (cat_names[i], v) for i, v in zip(chosen, values)
                )
                complete = len(chosen) == n_cats
                constraint = MorphConstraint(p.name, assignment, complete)
                if complete:
                    mem = [constraint.name]
                else:
                    want = dict(assignment)
                    mem = [
                        cls
                        for cls in all_classes
                        if all(f"{c}={v}" in cls.split(":", 1)[1].split("|") for c, v in want.items())
                    ]
                constraints.append(constraint)
                members.append(mem)
    return MorphConstraintSet(schema=schema, constraints=constraints, members=members)


def sanskrit_like_schema() -> MorphSchema:
    """Full-scale schema: 8-case nominals, the 10 finite tense-mood stems,
    declining participles, pronouns, and four indeclinable subtypes.

    Yields 528 morphological constraints and hence a 4752-template space.
    """
    cases = tuple(f"c{i}" for i in range(1, 9))
    genders = ("masc", "fem", "neut")
    numbers = ("sg", "du", "pl")
    tenses = tuple(f"t{i}" for i in range(1, 11))
    persons = ("p1", "p2", "p3")
    part_tenses = ("pres", "past", "fut")
    return MorphSchema(
        paradigms=[
            Paradigm("noun", (("case", cases), ("gender", genders), ("number", numbers))),
            Paradigm("verb", (("tense", tenses), ("person", persons), ("number", numbers))),
            Paradigm("participle", (("tense", part_tenses), ("gender", genders), ("number", numbers))),
            Paradigm("pronoun", (("case", cases), ("gender", genders), ("number", numbers))),
            Paradigm("indecl_adv"),
            Paradigm("indecl_conj"),
            Paradigm("indecl_part"),
            Paradigm("indecl_prev"),
        ]
    )


# ---------------------------------------------------------------------------
# co-occurrence statistics


@dataclass
class CooccurrenceStats:
    """Sentence-level occurrence and joint-occurrence counts.

    ``unary[(kind, value)]`` counts sentences containing the value;
    ``pairwise[(a, b)]`` (stored with a <= b) counts sentences containing
    both.  ``domain_sizes`` backs add-1 smoothing.
    """

    n_sentences: int
    unary: Counter = field(default_factory=Counter)
    pairwise: Counter = field(default_factory=Counter)
    domain_sizes: dict[str, int] = field(default_factory=dict)

    def count(self, item: tuple[str, str]) -> int:
        return self.unary.get(item, 0)

    def joint(self, a: tuple[str, str], b: tuple[str, str]) -> int:
        if a == b:
            return self.unary.get(a, 0)
        key = (a, b) if a <= b else (b, a)
        return self.pairwise.get(key, 0)

    def p_co(self, b: tuple[str, str], a: tuple[str, str]) -> float:
        """P(b | a) without smoothing; undefined (0) when a is unseen."""
        ca = self.count(a)
        return self.joint(b, a) / ca if ca else 0.0


def build_stats(corpus: TaggedCorpus) -> CooccurrenceStats:
    """Count sentence-level occurrences and co-occurrences of all values."""
    if not corpus.sentences:
        raise ValueError("empty corpus")
    stats = CooccurrenceStats(n_sentences=len(corpus.sentences))
    for sent in corpus.sentences:
        if not sent.segments:
            raise ValueError(f"sentence {sent.sentence_id!r} has no gold segments")
        present = set()
        for seg in sent.segments:
            present.add((WORD, seg.surface))
            present.add((ROOT, seg.lemma))
            present.add((CLASS, seg.morph_class))
        for item in present:
            stats.unary[item] += 1
        for a, b in itertools.combinations(sorted(present), 2):
            stats.pairwise[(a, b)] += 1
    stats.domain_sizes = {
        WORD: len(corpus.vocab_w),
        ROOT: len(corpus.vocab_r),
        CLASS: len(corpus.vocab_m),
    }
    return stats
