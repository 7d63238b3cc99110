"""Compile a scene graph into a pruned, salience-ordered, budgeted caption.

Pipeline: verbalize every triplet in source order, drop duplicate and
bidirectional relations (first occurrence wins), sort by descending
salience (sum of subject/object box areas, ties by source order), then
keep the longest prefix of whole phrases that fits the token budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownTarget
from .graph import SceneGraph, Triplet
from .textenc import split_text

SEPARATOR = ", "


@dataclass(frozen=True)
class Phrase:
    text: str
    salience: int
    source_index: int


@dataclass(frozen=True)
class Caption:
    phrases: tuple[Phrase, ...]
    rendered: str
    token_count: int


def salience_score(triplet: Triplet) -> int:
    """Combined pixel area of the subject and object boxes."""
    return triplet.subject_box.area + triplet.object_box.area


def verbalize(triplet: Triplet, graph: SceneGraph) -> Phrase:
    """Turn one triplet into its phrase: 'subject relation object', lowercased."""
    try:
        source_index = graph.triplets.index(triplet)
    except ValueError:
        source_index = -1
    return _verbalize_at(triplet, graph, source_index)


def _verbalize_at(triplet: Triplet, graph: SceneGraph, source_index: int) -> Phrase:
    subject = graph.entity_by_id(triplet.subject_id)
    obj = graph.entity_by_id(triplet.object_id)
    text = f"{subject.category} {triplet.relation} {obj.category}".lower()
    return Phrase(text=text, salience=salience_score(triplet), source_index=source_index)


def verbalize_all(graph: SceneGraph) -> list[Phrase]:
    return [_verbalize_at(t, graph, i) for i, t in enumerate(graph.triplets)]


def prune(phrases: list[Phrase], graph: SceneGraph) -> list[Phrase]:
    """Drop exact-duplicate triplets and reversed same-relation twins.

    A phrase is dropped iff an earlier kept-or-dropped phrase has the same
    (subject_id, relation, object_id), or the same relation with subject
    and object swapped. Survivor order is preserved.
    """
    seen: set[tuple[int, str, int]] = set()
    kept = []
    for phrase in phrases:
        trip = graph.triplets[phrase.source_index]
        key = (trip.subject_id, trip.relation, trip.object_id)
        reverse = (trip.object_id, trip.relation, trip.subject_id)
        if key in seen or reverse in seen:
            continue
        seen.add(key)
        kept.append(phrase)
    return kept


def order_phrases(phrases: list[Phrase]) -> list[Phrase]:
    """Sort by salience descending; ties keep source order (stable)."""
    return sorted(phrases, key=lambda p: (-p.salience, p.source_index))


def _assemble(phrases: list[Phrase], budget: int) -> tuple[Caption, list[bool]]:
    """Greedy whole-phrase prefix whose rendered token count fits the budget."""
    kept: list[Phrase] = []
    kept_flags = [False] * len(phrases)
    rendered = ""
    token_count = 0
    for i, phrase in enumerate(phrases):
        candidate = phrase.text if not kept else rendered + SEPARATOR + phrase.text
        n_tokens = len(split_text(candidate))
        if n_tokens > budget:
            break
        kept.append(phrase)
        kept_flags[i] = True
        rendered = candidate
        token_count = n_tokens
    return Caption(phrases=tuple(kept), rendered=rendered, token_count=token_count), kept_flags


def compile_caption(graph: SceneGraph, budget: int) -> Caption:
    """Full pipeline: verbalize -> prune -> order -> budget-truncate."""
    caption, _ = _assemble(order_phrases(prune(verbalize_all(graph), graph)), budget)
    return caption


def compile_report(graph: SceneGraph, budget: int) -> tuple[Caption, list[tuple[Phrase, bool]]]:
    """compile_caption plus the post-order phrase list with kept/dropped flags."""
    ordered = order_phrases(prune(verbalize_all(graph), graph))
    caption, flags = _assemble(ordered, budget)
    return caption, list(zip(ordered, flags))


def caption_from_phrases(phrases: list[Phrase], budget: int) -> Caption:
    """Build a caption from an explicit (already pruned/ordered) phrase list."""
    caption, _ = _assemble(phrases, budget)
    return caption
