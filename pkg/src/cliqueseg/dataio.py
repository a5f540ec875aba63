"""Line-delimited JSON file formats and run manifests.

One JSON object per line for corpora, candidate spaces and predictions;
single-object JSON for feature specs, manifests and reports.  Writers are
atomic (temp file + rename) and deterministic (sorted keys, no timestamps),
so identical runs produce byte-identical trees.
"""

from __future__ import annotations

import gzip
import json
import os
from collections import Counter
from pathlib import Path

from .corpus import (
    CooccurrenceStats,
    GoldSegment,
    GoldSentence,
    MorphSchema,
    Paradigm,
    TaggedCorpus,
)
from .features import FeatureSpec
from .graph import CandidateSpace, Segment
from .inference import Prediction

FORMAT_VERSION = 1


class DataError(ValueError):
    """Malformed or mismatched data file."""


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _segment_obj(seg) -> dict:
    return {
        "surface": seg.surface,
        "lemma": seg.lemma,
        "class": seg.morph_class,
        "start": seg.start,
        "end": seg.end,
    }


# -- corpus ------------------------------------------------------------------


def write_corpus(corpus: TaggedCorpus, path):
    lines = []
    for s in corpus.sentences:
        lines.append(
            _dump(
                {
                    "id": s.sentence_id,
                    "raw": s.raw,
                    "segments": [_segment_obj(g) for g in s.segments],
                }
            )
        )
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_corpus(path) -> TaggedCorpus:
    sentences = []
    for lineno, obj in _read_jsonl(path):
        try:
            segments = [
                GoldSegment(g["surface"], g["lemma"], g["class"], g["start"], g["end"])
                for g in obj["segments"]
            ]
            sentences.append(GoldSentence(obj["id"], obj["raw"], segments))
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad corpus record ({exc})") from exc
    if not sentences:
        raise DataError(f"{path}: empty corpus")
    return TaggedCorpus(sentences)


# -- candidate spaces ---------------------------------------------------------


def write_candidates(spaces: list[CandidateSpace], path):
    lines = []
    for cs in spaces:
        obj = {
            "id": cs.sentence_id,
            "input": cs.input,
            "segments": [_segment_obj(s) for s in cs.segments],
        }
        if cs.gold is not None:
            obj["gold"] = list(cs.gold)
        lines.append(_dump(obj))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_candidates(path) -> list[CandidateSpace]:
    spaces = []
    for lineno, obj in _read_jsonl(path):
        try:
            segments = [
                Segment(g["surface"], g["lemma"], g["class"], g["start"], g["end"])
                for g in obj["segments"]
            ]
            spaces.append(
                CandidateSpace(
                    input=obj["input"],
                    segments=segments,
                    gold=obj.get("gold"),
                    sentence_id=obj["id"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad candidate record ({exc})") from exc
    return spaces


# -- predictions --------------------------------------------------------------


def write_predictions(rows: list[tuple[str, Prediction, list[Segment]]], path):
    """Rows are (sentence id, prediction, its segments)."""
    lines = []
    for sid, pred, segs in rows:
        lines.append(
            _dump(
                {
                    "id": sid,
                    "kind": pred.kind,
                    "energy": pred.energy,
                    "segments": [_segment_obj(s) for s in segs],
                }
            )
        )
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_predictions(path) -> dict[str, list[GoldSegment]]:
    out = {}
    for lineno, obj in _read_jsonl(path):
        try:
            out[obj["id"]] = [
                GoldSegment(g["surface"], g["lemma"], g["class"], g["start"], g["end"])
                for g in obj["segments"]
            ]
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad prediction record ({exc})") from exc
    return out


# -- statistics ----------------------------------------------------------------


def schema_to_json(schema: MorphSchema) -> list:
    return [
        [p.name, [[c, list(v)] for c, v in p.categories]] for p in schema.paradigms
    ]


def schema_from_json(payload: list) -> MorphSchema:
    return MorphSchema(
        paradigms=[
            Paradigm(name, tuple((c, tuple(v)) for c, v in cats))
            for name, cats in payload
        ]
    )


def write_stats(stats: CooccurrenceStats, schema: MorphSchema, path):
    obj = {
        "format": "cliqueseg-stats",
        "version": FORMAT_VERSION,
        "n_sentences": stats.n_sentences,
        "schema": schema_to_json(schema),
        "domain_sizes": stats.domain_sizes,
        "unary": sorted([k, v, c] for (k, v), c in stats.unary.items()),
        "pairwise": sorted(
            [a[0], a[1], b[0], b[1], c] for (a, b), c in stats.pairwise.items()
        ),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with gzip.open(tmp, "wt", encoding="utf-8", mtime=0) as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
    os.replace(tmp, path)


def read_stats(path) -> tuple[CooccurrenceStats, MorphSchema]:
    try:
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: unreadable stats file ({exc})") from exc
    if obj.get("format") != "cliqueseg-stats" or obj.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: not a version-{FORMAT_VERSION} stats file")
    stats = CooccurrenceStats(
        n_sentences=obj["n_sentences"],
        unary=Counter({(k, v): c for k, v, c in obj["unary"]}),
        pairwise=Counter({((a, b), (c, d)): n for a, b, c, d, n in obj["pairwise"]}),
        domain_sizes=obj["domain_sizes"],
    )
    return stats, schema_from_json(obj["schema"])


# -- feature specs and manifests ----------------------------------------------


def write_feature_spec(spec: FeatureSpec, path):
    _atomic_write(Path(path), json.dumps(spec.to_json(), indent=2, sort_keys=True) + "\n")


def read_feature_spec(path) -> FeatureSpec:
    try:
        return FeatureSpec.from_json(json.loads(Path(path).read_text()))
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: bad feature spec ({exc})") from exc


def write_manifest(path, **payload):
    payload = dict(payload)
    payload["format_version"] = FORMAT_VERSION
    _atomic_write(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def _read_jsonl(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON ({exc})") from exc
