"""Scene graph data model, JSON ingestion, validation, and editing.

A scene graph is a set of entities plus relation triplets; each triplet
carries the bounding boxes of its subject and object. All types are
immutable values, and every operation returns a new graph.

File format (JSON, see docs/formats.md):

    {
      "canvas": {"width": 32, "height": 32},
      "entities": [{"id": 0, "category": "red circle"}, ...],
      "triplets": [{"subject_id": 0, "relation": "above", "object_id": 1,
                    "subject_box": {"x": 1, "y": 2, "w": 8, "h": 8},
                    "object_box":  {"x": 3, "y": 18, "w": 10, "h": 9}}, ...]
    }

Unknown top-level keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Union

from .errors import (
    BadBox,
    DanglingId,
    DuplicateId,
    MalformedFile,
    UnknownTarget,
    ValidationFailed,
)


@dataclass(frozen=True)
class BoundingBox:
    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        """(cx, cy) of the box in pixel coordinates."""
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class Entity:
    id: int
    category: str


@dataclass(frozen=True)
class Triplet:
    subject_id: int
    relation: str
    object_id: int
    subject_box: BoundingBox
    object_box: BoundingBox


@dataclass(frozen=True)
class SceneGraph:
    entities: tuple[Entity, ...]
    triplets: tuple[Triplet, ...]
    canvas: tuple[int, int]  # (width, height)

    def entity_by_id(self, entity_id: int) -> Entity:
        for ent in self.entities:
            if ent.id == entity_id:
                return ent
        raise UnknownTarget(f"entity id {entity_id} not in graph")

    def has_entity(self, entity_id: int) -> bool:
        return any(ent.id == entity_id for ent in self.entities)

    def entity_box(self, entity_id: int) -> Optional[BoundingBox]:
        """Box of the entity's first triplet occurrence, or None if it has none."""
        for trip in self.triplets:
            if trip.subject_id == entity_id:
                return trip.subject_box
            if trip.object_id == entity_id:
                return trip.object_box
        return None


# --- edit operations ------------------------------------------------------

@dataclass(frozen=True)
class AddObject:
    entity: Entity
    box: BoundingBox


@dataclass(frozen=True)
class AddRelation:
    triplet: Triplet


@dataclass(frozen=True)
class ReplaceObject:
    target_id: int
    category: str


@dataclass(frozen=True)
class DeleteObject:
    target_id: int


EditOp = Union[AddObject, AddRelation, ReplaceObject, DeleteObject]


# --- parsing / serialization -----------------------------------------------

_TOP_LEVEL_KEYS = {"canvas", "entities", "triplets"}


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise MalformedFile(message)


def _parse_box(obj, where: str) -> BoundingBox:
    _require(isinstance(obj, dict), f"{where}: box must be an object")
    _require(set(obj) == {"x", "y", "w", "h"}, f"{where}: box needs exactly x, y, w, h")
    for key in ("x", "y", "w", "h"):
        _require(isinstance(obj[key], int) and not isinstance(obj[key], bool),
                 f"{where}: box field {key} must be an integer")
    return BoundingBox(x=obj["x"], y=obj["y"], w=obj["w"], h=obj["h"])


def parse_graph(text: str) -> SceneGraph:
    """Parse graph-file contents into a validated SceneGraph.

    Raises MalformedFile for syntax/schema problems, DanglingId when a
    triplet references a missing entity, BadBox for degenerate or
    out-of-canvas boxes.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"invalid JSON: {exc}") from exc

    _require(isinstance(raw, dict), "top level must be an object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    _require(_TOP_LEVEL_KEYS <= set(raw), "missing one of canvas/entities/triplets")

    canvas = raw["canvas"]
    _require(isinstance(canvas, dict) and set(canvas) == {"width", "height"},
             "canvas must be an object with width and height")
    _require(all(isinstance(canvas[k], int) and canvas[k] > 0 for k in ("width", "height")),
             "canvas dimensions must be positive integers")

    _require(isinstance(raw["entities"], list), "entities must be a list")
    entities = []
    for i, ent in enumerate(raw["entities"]):
        _require(isinstance(ent, dict) and set(ent) == {"id", "category"},
                 f"entity {i}: needs exactly id and category")
        _require(isinstance(ent["id"], int) and not isinstance(ent["id"], bool),
                 f"entity {i}: id must be an integer")
        _require(isinstance(ent["category"], str), f"entity {i}: category must be a string")
        entities.append(Entity(id=ent["id"], category=ent["category"]))

    _require(isinstance(raw["triplets"], list), "triplets must be a list")
    triplet_keys = {"subject_id", "relation", "object_id", "subject_box", "object_box"}
    triplets = []
    for i, trip in enumerate(raw["triplets"]):
        _require(isinstance(trip, dict) and set(trip) == triplet_keys,
                 f"triplet {i}: needs exactly {sorted(triplet_keys)}")
        _require(isinstance(trip["relation"], str), f"triplet {i}: relation must be a string")
        for key in ("subject_id", "object_id"):
            _require(isinstance(trip[key], int) and not isinstance(trip[key], bool),
                     f"triplet {i}: {key} must be an integer")
        triplets.append(Triplet(
            subject_id=trip["subject_id"],
            relation=trip["relation"],
            object_id=trip["object_id"],
            subject_box=_parse_box(trip["subject_box"], f"triplet {i}: subject_box"),
            object_box=_parse_box(trip["object_box"], f"triplet {i}: object_box"),
        ))

    graph = SceneGraph(entities=tuple(entities), triplets=tuple(triplets),
                       canvas=(canvas["width"], canvas["height"]))
    _raise_first_violation(graph)
    return graph


def serialize(graph: SceneGraph) -> str:
    """Serialize to the graph file format; parse(serialize(g)) == g."""
    doc = {
        "canvas": {"width": graph.canvas[0], "height": graph.canvas[1]},
        "entities": [{"id": e.id, "category": e.category} for e in graph.entities],
        "triplets": [
            {
                "subject_id": t.subject_id,
                "relation": t.relation,
                "object_id": t.object_id,
                "subject_box": {"x": t.subject_box.x, "y": t.subject_box.y,
                                "w": t.subject_box.w, "h": t.subject_box.h},
                "object_box": {"x": t.object_box.x, "y": t.object_box.y,
                               "w": t.object_box.w, "h": t.object_box.h},
            }
            for t in graph.triplets
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


# --- validation -------------------------------------------------------------

def _box_violations(box: BoundingBox, canvas: tuple[int, int], where: str) -> list[str]:
    out = []
    if box.w <= 0 or box.h <= 0:
        out.append(f"{where}: box size must be positive, got {box.w}x{box.h}")
    if box.x < 0 or box.y < 0:
        out.append(f"{where}: box origin must be non-negative, got ({box.x}, {box.y})")
    if box.w > 0 and box.h > 0 and box.x >= 0 and box.y >= 0:
        if box.x + box.w > canvas[0] or box.y + box.h > canvas[1]:
            out.append(f"{where}: box leaves the {canvas[0]}x{canvas[1]} canvas")
    return out


def validate(graph: SceneGraph) -> list[str]:
    """Return a list of invariant violations; empty iff the graph is valid.

    Each message names the offending entity or triplet index.
    """
    violations: list[str] = []
    seen: dict[int, int] = {}
    for i, ent in enumerate(graph.entities):
        if ent.id in seen:
            violations.append(f"entity {i}: duplicate id {ent.id} (first at entity {seen[ent.id]})")
        else:
            seen[ent.id] = i
        if not ent.category:
            violations.append(f"entity {i}: category is empty")

    ids = {e.id for e in graph.entities}
    for i, trip in enumerate(graph.triplets):
        if trip.subject_id == trip.object_id:
            violations.append(f"triplet {i}: subject_id equals object_id ({trip.subject_id})")
        if trip.subject_id not in ids:
            violations.append(f"triplet {i}: subject_id {trip.subject_id} not in entities")
        if trip.object_id not in ids:
            violations.append(f"triplet {i}: object_id {trip.object_id} not in entities")
        violations.extend(_box_violations(trip.subject_box, graph.canvas, f"triplet {i}: subject_box"))
        violations.extend(_box_violations(trip.object_box, graph.canvas, f"triplet {i}: object_box"))
    return violations


def _raise_first_violation(graph: SceneGraph) -> None:
    """Map validation output onto the parse-time error classes."""
    violations = validate(graph)
    if not violations:
        return
    first = violations[0]
    if "not in entities" in first:
        raise DanglingId(first)
    if "box" in first:
        raise BadBox(first)
    raise MalformedFile(first)


# --- editing -----------------------------------------------------------------

def apply_edit(graph: SceneGraph, op: EditOp) -> SceneGraph:
    """Apply one edit operation, returning a new graph.

    The input graph is never mutated. The result always passes validate();
    otherwise ValidationFailed carries the violation list.
    """
    if isinstance(op, AddObject):
        if graph.has_entity(op.entity.id):
            raise DuplicateId(f"entity id {op.entity.id} already exists")
        box_problems = _box_violations(op.box, graph.canvas, "AddObject box")
        if box_problems:
            raise ValidationFailed(box_problems)
        result = replace(graph, entities=graph.entities + (op.entity,))
    elif isinstance(op, AddRelation):
        trip = op.triplet
        for eid, role in ((trip.subject_id, "subject"), (trip.object_id, "object")):
            if not graph.has_entity(eid):
                raise UnknownTarget(f"AddRelation {role}_id {eid} not in graph")
        result = replace(graph, triplets=graph.triplets + (trip,))
    elif isinstance(op, ReplaceObject):
        if not graph.has_entity(op.target_id):
            raise UnknownTarget(f"ReplaceObject target id {op.target_id} not in graph")
        result = replace(graph, entities=tuple(
            replace(e, category=op.category) if e.id == op.target_id else e
            for e in graph.entities
        ))
    elif isinstance(op, DeleteObject):
        if not graph.has_entity(op.target_id):
            raise UnknownTarget(f"DeleteObject target id {op.target_id} not in graph")
        result = replace(
            graph,
            entities=tuple(e for e in graph.entities if e.id != op.target_id),
            triplets=tuple(t for t in graph.triplets
                           if op.target_id not in (t.subject_id, t.object_id)),
        )
    else:
        raise TypeError(f"not an edit operation: {op!r}")

    problems = validate(result)
    if problems:
        raise ValidationFailed(problems)
    return result


def apply_edits(graph: SceneGraph, ops: Iterable[EditOp]) -> SceneGraph:
    for op in ops:
        graph = apply_edit(graph, op)
    return graph


def edit_op_from_dict(raw: dict) -> EditOp:
    """Parse one edit operation from its JSON form (see docs/api.md)."""
    _require(isinstance(raw, dict) and "kind" in raw, "edit op must have a kind")
    kind = raw["kind"]
    try:
        if kind == "AddObject":
            ent = raw["entity"]
            return AddObject(entity=Entity(id=ent["id"], category=ent["category"]),
                             box=_parse_box(raw["box"], "AddObject"))
        if kind == "AddRelation":
            trip = raw["triplet"]
            return AddRelation(triplet=Triplet(
                subject_id=trip["subject_id"], relation=trip["relation"],
                object_id=trip["object_id"],
                subject_box=_parse_box(trip["subject_box"], "AddRelation subject_box"),
                object_box=_parse_box(trip["object_box"], "AddRelation object_box"),
            ))
        if kind == "ReplaceObject":
            return ReplaceObject(target_id=raw["target_id"], category=raw["category"])
        if kind == "DeleteObject":
            return DeleteObject(target_id=raw["target_id"])
    except KeyError as exc:
        raise MalformedFile(f"edit op {kind}: missing field {exc}") from exc
    raise MalformedFile(f"unknown edit op kind {kind!r}")
