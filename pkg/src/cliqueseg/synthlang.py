"""A controllable toy agglutinating language with sandhi.

Plays the roles of both the tagged corpus and the lexicon-driven analyzer:
sentences are sampled from a latent topic/agreement model (so co-occurrence
statistics carry learnable signal), written out with euphonic rewriting at
word junctures, and then exhaustively re-analyzed into a candidate space with
known gold.  Word order is shuffled, so nothing sequential is learnable.

Juncture conventions: when no sandhi rule matches, a separator character is
written (a 1-character gap between the neighboring spans).  A rule u|v -> f
rewrites the meeting point; in ``overlap`` mode both neighboring spans include
f, in ``gap`` mode neither does.  Default rules keep |f| = 1 so the produced
overlaps and gaps match the graph builder's default allowances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import GoldSegment, GoldSentence, MorphSchema, Paradigm, TaggedCorpus
from .graph import CandidateSpace, Segment

SEPARATOR = " "

OVERLAP = "overlap"
GAP = "gap"


class AmbiguityLimitError(RuntimeError):
    """A sentence produced more candidate segmentations than allowed."""


@dataclass(frozen=True)
class SandhiRule:
    u: str  # suffix of the left word, non-empty
    v: str  # prefix of the right word, non-empty
    f: str  # replacement written at the juncture
    mode: str = OVERLAP

    def __post_init__(self):
        if not self.u or not self.v:
            raise ValueError("sandhi rules need non-empty u and v")
        if self.mode not in (OVERLAP, GAP):
            raise ValueError(f"unknown juncture mode {self.mode!r}")


@dataclass
class SandhiRuleSet:
    rules: list[SandhiRule] = field(default_factory=list)

    def first_match(self, left: str, right: str, left_visible: int) -> SandhiRule | None:
        """The rule applied between two adjacent surfaces, if any.

        ``left_visible`` is how much of the left surface is still written (its
        start may have been consumed by the previous juncture); a rule must
        leave at least one visible character on each side.
        """
        for r in self.rules:
            if (
                left.endswith(r.u)
                and left_visible - len(r.u) >= 1
                and right.startswith(r.v)
                and len(right) - len(r.v) >= 1
            ):
                return r
        return None


def default_rules() -> SandhiRuleSet:
    # left sides cover the word finals (s/m from the suffix table), right
    # sides the vowel onsets most words carry, and every f also occurs
    # word-internally, so junctures fire often and the rewritten characters
    # genuinely obscure the word boundaries.  Overlap images and gap images
    # stay disjoint: a juncture char shared between the two modes would let
    # readings differ only in span attribution (same words, spans off by
    # one), which no attribute-based scorer could resolve.
    return SandhiRuleSet(
        [
            SandhiRule("s", "a", "o", OVERLAP),
            SandhiRule("s", "i", "i", OVERLAP),
            SandhiRule("s", "u", "u", OVERLAP),
            SandhiRule("m", "a", "e", GAP),
            SandhiRule("m", "u", "e", GAP),
        ]
    )


def synth_schema() -> MorphSchema:
    """20 morphological classes over four part-of-speech paradigms.

    The number category is shared by nouns, verbs and adjectives, so
    sentence-level concord patterns cut across paradigms.
    """
    return MorphSchema(
        paradigms=[
            Paradigm("noun", (("case", ("nom", "acc", "gen")), ("number", ("sg", "pl")))),
            Paradigm("verb", (("tense", ("prs", "pst", "fut")), ("number", ("sg", "pl")))),
            Paradigm("adj", (("degree", ("pos", "cmp")), ("number", ("sg", "pl")))),
            Paradigm("prt", (("subtype", ("adv", "conj", "emph", "neg")),)),
        ]
    )


@dataclass
class SynthConfig:
    n_lemmas: int = 200
    syncretism_rate: float = 0.2
    homonymy_rate: float = 0.1
    n_train: int = 500
    n_dev: int = 100
    n_test: int = 100
    min_words: int = 3
    max_words: int = 12
    n_topics: int = 4
    topic_mix: float = 0.15
    agreement_beta: float = 5.0
    agreement_keep: float = 0.95
    max_candidate_nodes: int = 150
    max_resamples: int = 20
    consonants: str = "ptkb"
    vowels: str = "aiu"
    vowel_initial_rate: float = 0.9
    paradigm_weights: tuple[float, ...] = (0.35, 0.3, 0.15, 0.2)


@dataclass
class ToyLexicon:
    schema: MorphSchema
    # lemma -> paradigm name
    paradigm_of: dict[str, str]
    # lemma -> topic id
    topic_of: dict[str, int]
    # lemma -> classes it realizes
    classes_of: dict[str, list[str]]
    # (lemma, class) -> surface
    surface_of: dict[tuple[str, str], str]
    # surface -> [(lemma, class), ...], the analyzer's inverse index
    analyses: dict[str, list[tuple[str, str]]]

    def surfaces(self) -> list[str]:
        return sorted(self.analyses)


@dataclass
class Language:
    lexicon: ToyLexicon
    rules: SandhiRuleSet
    config: SynthConfig


def _suffix_pool(cfg: SynthConfig) -> list[str]:
    # includes the sandhi output o so juncture characters also occur
    # word-internally; finals are always s/m, the rule left-sides, so most
    # junctures are rewritable
    vowels = sorted(set(cfg.vowels) | {"e", "o"})
    finals = ["s", "m"]
    return [v + c for v in vowels for c in finals]


def build_lexicon(cfg: SynthConfig, seed: int) -> ToyLexicon:
    rng = np.random.default_rng((seed, 1))
    schema = synth_schema()
    paradigms = {p.name: p for p in schema.paradigms}
    names = [p.name for p in schema.paradigms]
    weights = np.array(cfg.paradigm_weights, dtype=float)
    weights /= weights.sum()

    # per-paradigm suffix tables with deliberate syncretism
    pool = _suffix_pool(cfg)
    suffixes: dict[str, dict[str, str]] = {}
    for p in schema.paradigms:
        classes = p.class_names()
        table: dict[str, str] = {}
        chosen: list[str] = []
        for cls in classes:
            if chosen and rng.random() < cfg.syncretism_rate:
                table[cls] = chosen[int(rng.integers(len(chosen)))]
            else:
                table[cls] = pool[int(rng.integers(len(pool)))]
            chosen.append(table[cls])
        suffixes[p.name] = table

    def sample_base() -> str:
        # optional bare-vowel onset keeps rule prefixes reachable, so the
        # vowel-merging junctures actually fire and obscure boundaries
        parts = []
        if rng.random() < cfg.vowel_initial_rate:
            parts.append(cfg.vowels[int(rng.integers(len(cfg.vowels)))])
        n_syll = 1 + int(rng.random() < 0.6)
        for _ in range(n_syll):
            parts.append(
                cfg.consonants[int(rng.integers(len(cfg.consonants)))]
                + cfg.vowels[int(rng.integers(len(cfg.vowels)))]
            )
        return "".join(parts)

    paradigm_of: dict[str, str] = {}
    topic_of: dict[str, int] = {}
    classes_of: dict[str, list[str]] = {}
    surface_of: dict[tuple[str, str], str] = {}
    analyses: dict[str, list[tuple[str, str]]] = {}
    bases: list[str] = []
    seen_lemmas: set[str] = set()
    while len(paradigm_of) < cfg.n_lemmas:
        if bases and rng.random() < cfg.homonymy_rate:
            base = bases[int(rng.integers(len(bases)))]
        else:
            base = sample_base()
        lemma = base
        k = 2
        while lemma in seen_lemmas:
            lemma = f"{base}~{k}"
            k += 1
        seen_lemmas.add(lemma)
        bases.append(base)
        pname = names[int(rng.choice(len(names), p=weights))]
        paradigm_of[lemma] = pname
        topic_of[lemma] = int(rng.integers(cfg.n_topics))
        if pname == "prt":
            # a particle realizes a single subtype class, bare stem
            classes = paradigms[pname].class_names()
            cls = classes[int(rng.integers(len(classes)))]
            classes_of[lemma] = [cls]
            surface_of[(lemma, cls)] = base
            analyses.setdefault(base, []).append((lemma, cls))
        else:
            classes_of[lemma] = list(paradigms[pname].class_names())
            for cls in classes_of[lemma]:
                surf = base + suffixes[pname][cls]
                surface_of[(lemma, cls)] = surf
                analyses.setdefault(surf, []).append((lemma, cls))
    for surf in analyses:
        analyses[surf].sort()
    return ToyLexicon(
        schema=schema,
        paradigm_of=paradigm_of,
        topic_of=topic_of,
        classes_of=classes_of,
        surface_of=surface_of,
        analyses=analyses,
    )


def make_language(cfg: SynthConfig, seed: int) -> Language:
    return Language(lexicon=build_lexicon(cfg, seed), rules=default_rules(), config=cfg)


# ---------------------------------------------------------------------------
# forward synthesis


def synthesize(surfaces: list[str], rules: SandhiRuleSet, sep: str = SEPARATOR):
    """Write a word sequence with sandhi; returns (raw, spans).

    Spans are half-open offsets into the produced string, one per word, with
    overlaps and gaps at rewritten junctures per the rule's mode.
    """
    raw = ""
    spans: list[tuple[int, int]] = []
    visible = 0  # visible length of the previous word
    for i, s in enumerate(surfaces):
        if i == 0:
            raw = s
            spans.append((0, len(s)))
            visible = len(s)
            continue
        prev = surfaces[i - 1]
        rule = rules.first_match(prev, s, visible)
        if rule is None:
            start = len(raw) + len(sep)
            raw = raw + sep + s
            spans.append((start, start + len(s)))
            visible = len(s)
            continue
        cut = len(raw) - len(rule.u)
        rest = s[len(rule.v):]
        raw = raw[:cut] + rule.f + rest
        ps, _ = spans[-1]
        if rule.mode == OVERLAP:
            spans[-1] = (ps, cut + len(rule.f))
            spans.append((cut, cut + len(rule.f) + len(rest)))
        else:
            spans[-1] = (ps, cut)
            spans.append((cut + len(rule.f), cut + len(rule.f) + len(rest)))
        visible = len(rest)
    return raw, spans


# ---------------------------------------------------------------------------
# inverse analysis (the lexicon-driven analyzer standing in for a real one)


END_STATE = "end"


def _analysis_graph(raw: str, lexicon: ToyLexicon, rules: SandhiRuleSet, sep: str):
    """Shared-forest reading of ``raw``: states and word transitions.

    A state is (span_start, content_start, required_prefix, blocked_rules)
    where required_prefix is the rule right-side the next word must begin
    with, and blocked_rules are earlier-precedence rules the previous
    juncture ruled out (the forward direction applies the first matching
    rule, so a reading is valid only if no earlier rule matched).  Every
    juncture constraint is local, so validity needs no global re-synthesis
    check and the full candidate space comes out of plain reachability
    instead of enumerating the (exponentially many) readings.
    """
    surfaces = lexicon.surfaces()
    by_prefix: dict[str, list[str]] = {"": surfaces}
    for r in rules.rules:
        if r.v not in by_prefix:
            by_prefix[r.v] = [s for s in surfaces if s.startswith(r.v)]

    transitions: dict[tuple, list[tuple[str, tuple[int, int], tuple]]] = {}
    order = {id(r): i for i, r in enumerate(rules.rules)}

    def expand(state):
        if state in transitions:
            return
        out = []
        transitions[state] = out
        span_start, cs, prefix, blocked = state
        for s in by_prefix[prefix]:
            rest = s[len(prefix):]
            if not rest:
                continue
            # a blocked (earlier-precedence) rule would have fired instead
            if any(
                s.startswith(rb.v) and len(s) - len(rb.v) >= 1 for rb in blocked
            ):
                continue
            if raw.startswith(rest, cs):
                end = cs + len(rest)
                if end == len(raw):
                    out.append((s, (span_start, end), END_STATE))
                elif raw.startswith(sep, end):
                    nxt_blocked = tuple(
                        r for r in rules.rules
                        if s.endswith(r.u) and len(rest) - len(r.u) >= 1
                    )
                    nxt = (end + len(sep), end + len(sep), "", nxt_blocked)
                    out.append((s, (span_start, end), nxt))
                    expand(nxt)
            for ri, r in enumerate(rules.rules):
                if not s.endswith(r.u):
                    continue
                vis = len(rest) - len(r.u)
                if vis < 1:
                    continue
                if not raw.startswith(rest[:vis], cs):
                    continue
                fpos = cs + vis
                if not raw.startswith(r.f, fpos):
                    continue
                earlier = tuple(
                    rb for rb in rules.rules[: ri]
                    if s.endswith(rb.u) and len(rest) - len(rb.u) >= 1
                )
                if r.mode == OVERLAP:
                    end = fpos + len(r.f)
                    nxt = (fpos, fpos + len(r.f), r.v, earlier)
                else:
                    end = fpos
                    nxt = (fpos + len(r.f), fpos + len(r.f), r.v, earlier)
                out.append((s, (span_start, end), nxt))
                expand(nxt)

    init = (0, 0, "", ())
    expand(init)

    # keep only transitions on paths from init to the end state
    productive: dict[tuple, bool] = {END_STATE: True}

    def can_finish(state) -> bool:
        if state in productive:
            return productive[state]
        productive[state] = False  # states are acyclic; guard anyway
        # evaluate every child (no short-circuit): reachability must be
        # known for all of them when the segment union is collected
        results = [
            nxt == END_STATE or can_finish(nxt) for _, _, nxt in transitions[state]
        ]
        ok = any(results)
        productive[state] = ok
        return ok

    can_finish(init)
    return init, transitions, productive


def analyze(raw: str, lexicon: ToyLexicon, rules: SandhiRuleSet,
            sep: str = SEPARATOR, max_nodes: int | None = None) -> CandidateSpace:
    """Candidate space for ``raw``: the union of segments over all readings,
    expanded into one node per (lemma, class) analysis of each surface."""
    init, transitions, productive = _analysis_graph(raw, lexicon, rules, sep)
    segs: dict[tuple, Segment] = {}
    seen = set()
    stack = [init]
    while stack:
        state = stack.pop()
        if state in seen or not productive.get(state, False):
            continue
        seen.add(state)
        for surface, (start, end), nxt in transitions[state]:
            if nxt != END_STATE and not productive.get(nxt, False):
                continue
            for lemma, cls in lexicon.analyses[surface]:
                node = Segment(surface, lemma, cls, start, end)
                segs.setdefault(node.key(), node)
            if nxt != END_STATE:
                stack.append(nxt)
    segments = sorted(
        segs.values(), key=lambda s: (s.start, s.end, s.surface, s.lemma, s.morph_class)
    )
    if max_nodes is not None and len(segments) > max_nodes:
        raise AmbiguityLimitError(
            f"{len(segments)} candidate nodes exceed the {max_nodes} cap for {raw!r}"
        )
    return CandidateSpace(input=raw, segments=segments, gold=None)


def readings(raw: str, lexicon: ToyLexicon, rules: SandhiRuleSet,
             sep: str = SEPARATOR, cap: int = 10_000) -> list[list[tuple[str, int, int]]]:
    """Explicit reading chains of (surface, start, end); test-sized inputs."""
    init, transitions, productive = _analysis_graph(raw, lexicon, rules, sep)
    out: list[list[tuple[str, int, int]]] = []

    def walk(state, chain):
        if len(out) > cap:
            raise AmbiguityLimitError(f"more than {cap} readings for {raw!r}")
        for surface, span, nxt in transitions[state]:
            chain.append((surface, span[0], span[1]))
            if nxt == END_STATE:
                out.append(list(chain))
            elif productive.get(nxt, False):
                walk(nxt, chain)
            chain.pop()

    if productive.get(init, False):
        walk(init, [])
    return out


# ---------------------------------------------------------------------------
# sentence sampling


def _category_index(schema: MorphSchema):
    """Category names with their value sets, shared across paradigms.

    Keying agreement by category name alone makes same-named categories
    (like number on nouns and adjectives) agree across the sentence the way
    real concord does, which is what gives class co-occurrence its signal.
    """
    cats: dict[str, tuple[str, ...]] = {}
    for p in schema.paradigms:
        for cname, values in p.categories:
            cats.setdefault(cname, values)
    return sorted(cats.items())


def _class_assignment(cls: str) -> dict[str, str]:
    if ":" not in cls:
        return {}
    return dict(part.split("=", 1) for part in cls.split(":", 1)[1].split("|"))


def _sample_sentence(lang: Language, rng) -> list[tuple[str, str, str]]:
    """One gold word sequence: (lemma, class, surface) triples, order shuffled."""
    cfg = lang.config
    lex = lang.lexicon
    n_words = int(rng.integers(cfg.min_words, cfg.max_words + 1))
    topic = int(rng.integers(cfg.n_topics))
    lemmas_all = sorted(lex.paradigm_of)
    pool = [l for l in lemmas_all if lex.topic_of[l] == topic] or lemmas_all

    cats = _category_index(lex.schema)
    preferred: dict[str, str] = {}
    for ci, (cname, values) in enumerate(cats):
        if rng.random() < cfg.agreement_keep:
            preferred[cname] = values[(topic * 7 + ci * 3) % len(values)]
        else:
            preferred[cname] = values[int(rng.integers(len(values)))]

    words = []
    for _ in range(n_words):
        src = pool if rng.random() > cfg.topic_mix else lemmas_all
        lemma = src[int(rng.integers(len(src)))]
        classes = lex.classes_of[lemma]
        weights = []
        for cls in classes:
            assign = _class_assignment(cls)
            hits = sum(1 for c, v in assign.items() if preferred.get(c) == v)
            weights.append(np.exp(cfg.agreement_beta * hits))
        w = np.array(weights) / np.sum(weights)
        cls = classes[int(rng.choice(len(classes), p=w))]
        words.append((lemma, cls, lex.surface_of[(lemma, cls)]))
    perm = rng.permutation(n_words)
    return [words[int(i)] for i in perm]


def generate_sentence(lang: Language, seed: int, split: int, index: int):
    """One (GoldSentence, CandidateSpace) pair; deterministic in its seeds."""
    cfg = lang.config
    last_error = None
    for attempt in range(cfg.max_resamples):
        rng = np.random.default_rng((seed, split, index, attempt))
        words = _sample_sentence(lang, rng)
        raw, spans = synthesize([w[2] for w in words], lang.rules)
        try:
            cs = analyze(raw, lang.lexicon, lang.rules, max_nodes=cfg.max_candidate_nodes)
        except AmbiguityLimitError as exc:
            last_error = exc
            continue
        key_index = {s.key(): i for i, s in enumerate(cs.segments)}
        gold_keys = [
            (lemma, cls, a, b) for (lemma, cls, _), (a, b) in zip(words, spans)
        ]
        if any(k not in key_index for k in gold_keys):
            raise AssertionError(
                f"gold segmentation missing from candidate space for {raw!r}"
            )
        sid = f"s{split}-{index:05d}"
        cs.gold = [key_index[k] for k in gold_keys]
        cs.sentence_id = sid
        gold_segments = [
            GoldSegment(surf, lemma, cls, a, b)
            for (lemma, cls, surf), (a, b) in zip(words, spans)
        ]
        return GoldSentence(sid, raw, gold_segments), cs
    raise AmbiguityLimitError(
        f"could not sample sentence {split}/{index} within "
        f"{cfg.max_resamples} attempts: {last_error}"
    )


def generate(cfg: SynthConfig, seed: int, n_sentences: int | None = None,
             split: int = 0, language: Language | None = None):
    """A tagged corpus plus candidate spaces, with known gold throughout."""
    lang = language or make_language(cfg, seed)
    n = cfg.n_train if n_sentences is None else n_sentences
    if n <= 0:
        raise ValueError("need a positive number of sentences")
    sentences, spaces = [], []
    for i in range(n):
        sent, cs = generate_sentence(lang, seed, split, i)
        sentences.append(sent)
        spaces.append(cs)
    return TaggedCorpus(sentences), spaces


@dataclass
class Benchmark:
    language: Language
    train_corpus: TaggedCorpus
    train_spaces: list[CandidateSpace]
    dev_corpus: TaggedCorpus
    dev_spaces: list[CandidateSpace]
    test_corpus: TaggedCorpus
    test_spaces: list[CandidateSpace]


def make_benchmark(cfg: SynthConfig | None = None, seed: int = 0) -> Benchmark:
    """The standard three-way split sharing one sampled language."""
    cfg = cfg or SynthConfig()
    lang = make_language(cfg, seed)
    train_c, train_s = generate(cfg, seed, cfg.n_train, split=0, language=lang)
    dev_c, dev_s = generate(cfg, seed, cfg.n_dev, split=1, language=lang)
    test_c, test_s = generate(cfg, seed, cfg.n_test, split=2, language=lang)
    return Benchmark(lang, train_c, train_s, dev_c, dev_s, test_c, test_s)


# ---------------------------------------------------------------------------
# structural fuzzing helper (no lexicon; used by oracle-based tests)


def random_candidate_space(rng, max_nodes: int = 19, min_nodes: int = 3) -> CandidateSpace:
    """A random coverable candidate space: a gold chain plus distractors."""
    length = int(rng.integers(6, 18))
    spans: list[tuple[int, int]] = []
    prev_start, prev_end = -1, 0
    while prev_end < length:
        if not spans:
            start = 0
        else:
            lo = prev_end + int(rng.integers(-1, 2))  # overlap 1, touch, gap 1
            start = max(lo, prev_start + 1, 0)
            start = min(start, length - 1)
        min_w = max(prev_end - start + 1, 1)  # extend strictly past the chain
        w = int(rng.integers(min_w, min_w + 4))
        end = min(start + w, length)
        if length - end == 1:  # avoid stranding a 1-char tail
            end = length
        spans.append((start, end))
        prev_start, prev_end = start, end
    segs = []
    classes = ["noun:x=a", "noun:x=b", "verb:y=a"]
    lemmas = ["la", "lb", "lc"]
    for a, b in spans:
        segs.append(
            Segment(f"w{a}_{b}", lemmas[int(rng.integers(3))], classes[int(rng.integers(3))], a, b)
        )
    n_extra = int(rng.integers(min_nodes, max_nodes + 1))
    tries = 0
    while len(segs) < n_extra and tries < 200:
        tries += 1
        a = int(rng.integers(0, length))
        b = a + int(rng.integers(1, 6))
        if b > length:
            continue
        s = Segment(
            f"w{a}_{b}",
            lemmas[int(rng.integers(3))],
            classes[int(rng.integers(3))],
            a,
            b,
        )
        if any(s.key() == t.key() for t in segs):
            continue
        segs.append(s)
    gold = list(range(len(spans)))
    return CandidateSpace(input="x" * length, segments=segs, gold=gold)
