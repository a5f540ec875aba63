"""Scoring predicted segmentations against gold.

Two tasks: surface-form correctness (WPT) and the stricter joint task
(WP3T) where the lemma and morphological class must match too.  Items are
matched as multisets keyed by (surface, span) resp. (surface, span, lemma,
class), so repeated words only match positionally.  Macro scores average
per-sentence precision/recall/F1; PM is the fraction of exactly-matched
sentences.  All figures are percentages.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

WPT = "wpt"
WP3T = "wp3t"
TASKS = (WPT, WP3T)

GROUPINGS = ("gold_word_count", "coarse_pos", "node_count")


def item_key(seg, task: str):
    if task == WPT:
        return (seg.surface, seg.start, seg.end)
    if task == WP3T:
        return (seg.surface, seg.start, seg.end, seg.lemma, seg.morph_class)
    raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


@dataclass
class SentenceScore:
    sentence_id: str
    precision: float
    recall: float
    f1: float
    perfect: bool
    n_pred: int
    n_gold: int


@dataclass
class EvalReport:
    task: str
    macro_p: float
    macro_r: float
    macro_f: float
    pm: float
    per_sentence: list[SentenceScore] = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"{self.task.upper()}: P={self.macro_p:.2f} R={self.macro_r:.2f} "
            f"F={self.macro_f:.2f} PM={self.pm:.2f}  ({len(self.per_sentence)} sentences)"
        )


def _score_sentence(sid: str, pred, gold, task: str) -> SentenceScore:
    pc = Counter(item_key(s, task) for s in pred)
    gc = Counter(item_key(s, task) for s in gold)
    matches = sum(min(pc[k], gc[k]) for k in pc)
    p = matches / sum(pc.values()) if pc else 0.0
    r = matches / sum(gc.values()) if gc else 0.0
    f = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
    return SentenceScore(sid, 100 * p, 100 * r, 100 * f, pc == gc, sum(pc.values()), sum(gc.values()))


def _check_alignment(preds: dict, golds: dict):
    missing = sorted(set(golds) - set(preds))
    extra = sorted(set(preds) - set(golds))
    if missing or extra:
        raise ValueError(
            f"prediction/gold id mismatch; missing predictions for {missing}, "
            f"unmatched predictions {extra}"
        )


def score(preds: dict, golds: dict, task: str = WPT) -> EvalReport:
    """Macro-averaged P/R/F and perfect-match rate over aligned sentences.

    ``preds`` and ``golds`` map sentence id to a list of segment-like objects
    (anything with surface/lemma/morph_class/start/end attributes).
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    _check_alignment(preds, golds)
    rows = [
        _score_sentence(sid, preds[sid], golds[sid], task) for sid in sorted(golds)
    ]
    if not rows:
        raise ValueError("no sentences to score")
    n = len(rows)
    return EvalReport(
        task=task,
        macro_p=sum(r.precision for r in rows) / n,
        macro_r=sum(r.recall for r in rows) / n,
        macro_f=sum(r.f1 for r in rows) / n,
        pm=100 * sum(r.perfect for r in rows) / n,
        per_sentence=rows,
    )


def _subset_report(preds, golds, ids, task) -> EvalReport:
    return score({i: preds[i] for i in ids}, {i: golds[i] for i in ids}, task)


def grouped_report(
    preds: dict,
    golds: dict,
    grouping: str,
    task: str = WPT,
    node_counts: dict | None = None,
    coarse_pos=None,
) -> list[dict]:
    """Per-bucket metric rows for diagnostic tables.

    ``gold_word_count`` and ``node_count`` recompute the macro metrics per
    bucket; ``coarse_pos`` reports micro-averaged recall per part-of-speech
    group of the gold segments (the class name up to its first colon unless a
    ``coarse_pos`` callable is given).
    """
    if grouping not in GROUPINGS:
        raise ValueError(f"unknown grouping {grouping!r}; expected one of {GROUPINGS}")
    _check_alignment(preds, golds)
    if grouping == "gold_word_count":
        buckets: dict[int, list] = {}
        for sid in golds:
            buckets.setdefault(len(golds[sid]), []).append(sid)
        rows = []
        for size in sorted(buckets):
            rep = _subset_report(preds, golds, buckets[size], task)
            rows.append(
                {
                    "bucket": size,
                    "n_sentences": len(buckets[size]),
                    "macro_p": rep.macro_p,
                    "macro_r": rep.macro_r,
                    "macro_f": rep.macro_f,
                    "pm": rep.pm,
                }
            )
        return rows
    if grouping == "node_count":
        if node_counts is None:
            raise ValueError("node_count grouping needs a node_counts mapping")
        buckets = {}
        for sid in golds:
            buckets.setdefault(node_counts[sid], []).append(sid)
        rows = []
        for size in sorted(buckets):
            rep = _subset_report(preds, golds, buckets[size], task)
            rows.append(
                {
                    "bucket": size,
                    "n_sentences": len(buckets[size]),
                    "macro_p": rep.macro_p,
                    "macro_r": rep.macro_r,
                    "macro_f": rep.macro_f,
                    "pm": rep.pm,
                }
            )
        return rows
    # coarse_pos: micro recall of gold segments per POS group
    pos_of = coarse_pos or (lambda cls: cls.split(":", 1)[0])
    matched: Counter = Counter()
    totals: Counter = Counter()
    for sid in sorted(golds):
        pc = Counter(item_key(s, task) for s in preds[sid])
        for seg in sorted(golds[sid], key=lambda s: (s.start, s.end, s.surface)):
            pos = pos_of(seg.morph_class)
            totals[pos] += 1
            k = item_key(seg, task)
            if pc[k] > 0:
                pc[k] -= 1
                matched[pos] += 1
    return [
        {
            "bucket": pos,
            "n_gold": totals[pos],
            "recall": 100 * matched[pos] / totals[pos],
        }
        for pos in sorted(totals)
    ]


def format_report(report: EvalReport) -> str:
    lines = [report.summary()]
    return "\n".join(lines)


def format_grouped(rows: list[dict], grouping: str) -> str:
    if not rows:
        return "(empty)"
    if grouping == "coarse_pos":
        lines = [f"{'POS':<16}{'gold':>8}{'recall':>10}"]
        for r in rows:
            lines.append(f"{r['bucket']:<16}{r['n_gold']:>8}{r['recall']:>10.2f}")
        return "\n".join(lines)
    lines = [f"{'bucket':>8}{'sents':>8}{'P':>9}{'R':>9}{'F':>9}{'PM':>9}"]
    for r in rows:
        lines.append(
            f"{r['bucket']:>8}{r['n_sentences']:>8}{r['macro_p']:>9.2f}"
            f"{r['macro_r']:>9.2f}{r['macro_f']:>9.2f}{r['pm']:>9.2f}"
        )
    return "\n".join(lines)
