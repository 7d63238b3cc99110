import json

import pytest

from scenegen import synthdata
from scenegen.errors import (
    BadBox,
    DanglingId,
    DuplicateId,
    MalformedFile,
    UnknownTarget,
    ValidationFailed,
)
from scenegen.graph import (
    AddObject,
    AddRelation,
    BoundingBox,
    DeleteObject,
    Entity,
    ReplaceObject,
    Triplet,
    apply_edit,
    edit_op_from_dict,
    parse_graph,
    serialize,
    validate,
)
from conftest import box, make_graph

GOOD_FILE = json.dumps({
    "canvas": {"width": 32, "height": 32},
    "entities": [{"id": 0, "category": "red circle"},
                 {"id": 1, "category": "blue square"}],
    "triplets": [{"subject_id": 0, "relation": "above", "object_id": 1,
                  "subject_box": {"x": 2, "y": 2, "w": 8, "h": 8},
                  "object_box": {"x": 4, "y": 20, "w": 10, "h": 10}}],
})


def test_parse_basic_counts():
    graph = parse_graph(GOOD_FILE)
    assert len(graph.entities) == 2
    assert len(graph.triplets) == 1
    assert graph.canvas == (32, 32)
    assert graph.triplets[0].relation == "above"


def test_parse_is_lossless():
    graph = parse_graph(GOOD_FILE)
    assert parse_graph(serialize(graph)) == graph


def test_parse_rejects_bad_json():
    with pytest.raises(MalformedFile):
        parse_graph("{not json")


def test_parse_rejects_unknown_top_level_key():
    doc = json.loads(GOOD_FILE)
    doc["extra"] = 1
    with pytest.raises(MalformedFile, match="unknown top-level"):
        parse_graph(json.dumps(doc))


def test_parse_dangling_id():
    doc = json.loads(GOOD_FILE)
    doc["triplets"][0]["object_id"] = 99
    with pytest.raises(DanglingId):
        parse_graph(json.dumps(doc))


def test_parse_bad_box_zero_width():
    doc = json.loads(GOOD_FILE)
    doc["triplets"][0]["subject_box"]["w"] = 0
    with pytest.raises(BadBox):
        parse_graph(json.dumps(doc))


def test_parse_bad_box_out_of_canvas():
    doc = json.loads(GOOD_FILE)
    doc["triplets"][0]["object_box"] = {"x": 28, "y": 28, "w": 8, "h": 8}
    with pytest.raises(BadBox):
        parse_graph(json.dumps(doc))


def test_roundtrip_on_sampled_graphs(spec):
    for i in range(100):
        graph = synthdata.sample_graph(seed=300 + i, spec=spec, n_objects=1 + i % 4)
        assert parse_graph(serialize(graph)) == graph


# --- validate -----------------------------------------------------------------

def test_validate_clean_graph():
    assert validate(parse_graph(GOOD_FILE)) == []


def test_validate_self_loop_names_triplet():
    g = make_graph([(0, "red circle")],
                   [(0, "above", 0, box(1, 1, 4, 4), box(1, 1, 4, 4))])
    violations = validate(g)
    assert len(violations) == 1
    assert "triplet 0" in violations[0]
    assert "subject_id equals object_id" in violations[0]


def test_validate_bad_box_named():
    g = make_graph([(0, "red circle"), (1, "blue square")],
                   [(0, "above", 1, box(1, 1, 0, 4), box(8, 8, 4, 4))])
    violations = validate(g)
    assert any("triplet 0: subject_box" in v for v in violations)


def test_validate_duplicate_entity_ids():
    g = make_graph([(0, "red circle"), (0, "blue square")], [])
    assert any("duplicate id 0" in v for v in violations_of(g))


def violations_of(g):
    return validate(g)


# --- apply_edit ------------------------------------------------------------------

@pytest.fixture
def base_graph():
    return make_graph(
        [(0, "rock"), (1, "water"), (2, "tree")],
        [(0, "above", 1, box(2, 2, 8, 8), box(2, 14, 8, 8)),
         (2, "left of", 0, box(14, 2, 8, 8), box(2, 2, 8, 8))],
    )


def test_delete_object_cascades(base_graph):
    out = apply_edit(base_graph, DeleteObject(target_id=0))
    assert len(out.entities) == 2
    assert len(out.triplets) == 0  # both triplets referenced entity 0
    assert validate(out) == []
    # input untouched
    assert len(base_graph.entities) == 3 and len(base_graph.triplets) == 2


def test_replace_object_renames_everywhere(base_graph):
    out = apply_edit(base_graph, ReplaceObject(target_id=1, category="sky"))
    assert out.entity_by_id(1).category == "sky"
    assert [t.relation for t in out.triplets] == [t.relation for t in base_graph.triplets]
    assert len(out.triplets) == len(base_graph.triplets)


def test_add_object_then_relation_then_delete(base_graph):
    g = apply_edit(base_graph, AddObject(entity=Entity(id=3, category="cloud"),
                                         box=box(20, 20, 8, 8)))
    g = apply_edit(g, AddRelation(triplet=Triplet(
        subject_id=3, relation="below", object_id=2,
        subject_box=box(20, 20, 8, 8), object_box=box(14, 2, 8, 8))))
    assert len(g.triplets) == 3
    g = apply_edit(g, DeleteObject(target_id=3))
    assert len(g.triplets) == 2
    assert validate(g) == []


def test_add_object_duplicate_id(base_graph):
    with pytest.raises(DuplicateId):
        apply_edit(base_graph, AddObject(entity=Entity(id=0, category="x"),
                                         box=box(1, 1, 4, 4)))


def test_add_object_bad_box(base_graph):
    with pytest.raises(ValidationFailed):
        apply_edit(base_graph, AddObject(entity=Entity(id=9, category="x"),
                                         box=box(30, 30, 8, 8)))


def test_unknown_targets(base_graph):
    with pytest.raises(UnknownTarget):
        apply_edit(base_graph, DeleteObject(target_id=42))
    with pytest.raises(UnknownTarget):
        apply_edit(base_graph, ReplaceObject(target_id=42, category="x"))
    with pytest.raises(UnknownTarget):
        apply_edit(base_graph, AddRelation(triplet=Triplet(
            subject_id=0, relation="above", object_id=42,
            subject_box=box(1, 1, 4, 4), object_box=box(8, 8, 4, 4))))


def test_delete_decrements_counts_by_reference_count(spec):
    import numpy as np

    rng = np.random.default_rng(0)
    for i in range(50):
        graph = synthdata.sample_graph(seed=900 + i, spec=spec, n_objects=3 + i % 2)
        target = int(rng.choice([e.id for e in graph.entities]))
        referencing = sum(1 for t in graph.triplets
                          if target in (t.subject_id, t.object_id))
        out = apply_edit(graph, DeleteObject(target_id=target))
        assert len(out.entities) == len(graph.entities) - 1
        assert len(out.triplets) == len(graph.triplets) - referencing
        assert validate(out) == []


def test_edit_op_from_dict_roundtrip():
    op = edit_op_from_dict({"kind": "ReplaceObject", "target_id": 1, "category": "sky"})
    assert op == ReplaceObject(target_id=1, category="sky")
    op = edit_op_from_dict({"kind": "AddObject",
                            "entity": {"id": 5, "category": "red circle"},
                            "box": {"x": 1, "y": 1, "w": 4, "h": 4}})
    assert op.entity.id == 5 and op.box == BoundingBox(1, 1, 4, 4)
    with pytest.raises(MalformedFile):
        edit_op_from_dict({"kind": "Nope"})
