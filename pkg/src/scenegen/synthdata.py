"""Synthetic shape-scene domain: sampling, rendering, and exact detection.

Scenes are 1..4 non-overlapping colored shapes on a white canvas. The
sampler, renderer and detector share one rasterization and one relation
rule, so detect(render(g)) reproduces a sampled graph exactly:

  * entities are ordered by centroid y (sampling enforces a >=3 px row
    margin, so +-1 px detection noise cannot reorder them);
  * every unordered entity pair yields one triplet; the subject/object
    direction is a deterministic parity of the two category strings, so
    the detector re-derives the same direction;
  * the relation is the centroid-dominance rule (vertical wins only when
    |dy| > |dx|; ties go horizontal), and sampling enforces a >=3 px
    dominance margin so detection noise cannot flip it.

Overlapping same-color shapes would merge into one component; the sampler
excludes overlap (>=2 px gaps), so that case cannot arise in sampled data.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, PlacementFailure, UnknownCategory
from .graph import BoundingBox, Entity, SceneGraph, Triplet

UNKNOWN = "unknown"

# margins guaranteeing detection-noise-proof ordering and relations
ROW_MARGIN = 3.0
DOMINANCE_MARGIN = 3.0
BOX_GAP = 2
PLACEMENT_ATTEMPTS = 1000

# detector constants
MIN_COMPONENT_AREA = 12
SHAPE_IOU_FLOOR = 0.5


@dataclass(frozen=True)
class DomainSpec:
    shapes: tuple[str, ...] = ("circle", "square", "triangle")
    colors: tuple[tuple[str, tuple[float, float, float]], ...] = (
        ("red", (1.0, 0.0, 0.0)),
        ("green", (0.0, 1.0, 0.0)),
        ("blue", (0.0, 0.0, 1.0)),
        ("yellow", (1.0, 1.0, 0.0)),
    )
    relations: tuple[str, ...] = ("above", "below", "left of", "right of")
    canvas: tuple[int, int] = (32, 32)  # (width, height)
    size_range: tuple[int, int] = (8, 12)
    # box coordinates/sizes snap to this grid; aligning with the finest VQ
    # patch size keeps the patch vocabulary small and reconstructions crisp
    position_step: int = 4

    @property
    def color_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.colors)

    @property
    def categories(self) -> tuple[str, ...]:
        return tuple(f"{c} {s}" for c in self.color_names for s in self.shapes)

    def rgb(self, color_name: str) -> tuple[float, float, float]:
        for name, rgb in self.colors:
            if name == color_name:
                return rgb
        raise UnknownCategory(f"color {color_name!r} not in domain")


def default_spec() -> DomainSpec:
    return DomainSpec()


def lexicon_words(spec: DomainSpec) -> list[str]:
    """All words the domain's captions can contain (for vocabulary building)."""
    words: set[str] = set()
    for cat in spec.categories:
        words.update(cat.split())
    for rel in spec.relations:
        words.update(rel.split())
    return sorted(words)


# --- shared rasterization ----------------------------------------------------

def shape_mask(shape: str, w: int, h: int) -> np.ndarray:
    """Boolean (h, w) pixel mask of a shape filling its bounding box.

    Masks touch all four box edges, so a detected component's bounding box
    equals the drawn box exactly.
    """
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    if shape == "square":
        return np.ones((h, w), dtype=bool)
    if shape == "circle":
        nx = (xs + 0.5 - w / 2.0) / (w / 2.0)
        ny = (ys + 0.5 - h / 2.0) / (h / 2.0)
        return nx * nx + ny * ny <= 1.0
    if shape == "triangle":
        # apex row keeps a half-width of 0.5 so every row rasterizes non-empty
        half_w = np.maximum((ys + 1.0) / h * (w / 2.0), 0.5)
        return np.abs(xs + 0.5 - w / 2.0) <= half_w
    raise UnknownCategory(f"shape {shape!r} not in domain")


def split_category(category: str) -> tuple[str, str]:
    """'red circle' -> ('red', 'circle')."""
    parts = category.split()
    if len(parts) != 2:
        raise UnknownCategory(f"category {category!r} is not 'color shape'")
    return parts[0], parts[1]


# --- relation rule ------------------------------------------------------------

def relation_between(subject_center: tuple[float, float],
                     object_center: tuple[float, float]) -> str:
    """Spatial relation of subject w.r.t. object by centroid dominance.

    Vertical relations require |dy| > |dx|; ties break toward horizontal.
    """
    dx = subject_center[0] - object_center[0]
    dy = subject_center[1] - object_center[1]
    if abs(dy) > abs(dx):
        return "above" if dy < 0 else "below"
    return "left of" if dx < 0 else "right of"


def _pair_flipped(cat_a: str, cat_b: str) -> bool:
    """Deterministic subject/object direction for the canonical pair (a, b)."""
    return zlib.crc32(f"{cat_a}|{cat_b}".encode("utf-8")) & 1 == 1


def canonical_triplets(entities: list[Entity], boxes: list[BoundingBox]) -> list[Triplet]:
    """All-pairs triplets for entities already in canonical (centroid-y) order."""
    triplets = []
    for i in range(len(entities)):
        for j in range(i + 1, len(entities)):
            if _pair_flipped(entities[i].category, entities[j].category):
                s, o = j, i
            else:
                s, o = i, j
            rel = relation_between(boxes[s].center, boxes[o].center)
            triplets.append(Triplet(
                subject_id=entities[s].id, relation=rel, object_id=entities[o].id,
                subject_box=boxes[s], object_box=boxes[o],
            ))
    return triplets


# --- sampling ------------------------------------------------------------------

def _boxes_admissible(boxes: list[BoundingBox]) -> bool:
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            a, b = boxes[i], boxes[j]
            hgap = max(b.x - (a.x + a.w), a.x - (b.x + b.w))
            vgap = max(b.y - (a.y + a.h), a.y - (b.y + b.h))
            if max(hgap, vgap) < BOX_GAP:
                return False
            (ax, ay), (bx, by) = a.center, b.center
            if abs(ay - by) < ROW_MARGIN:
                return False
            if abs(abs(ay - by) - abs(ax - bx)) < DOMINANCE_MARGIN:
                return False
    return True


def sample_graph(seed: int, spec: DomainSpec | None = None, n_objects: int = 3) -> SceneGraph:
    """Sample a valid scene graph with non-overlapping, margin-separated objects.

    Placement is rejection sampling; after PLACEMENT_ATTEMPTS failures the
    upper size bound shrinks by one pixel, down to the lower bound, before
    giving up with PlacementFailure.
    """
    if n_objects < 1:
        raise ValueError("n_objects must be >= 1")
    spec = spec or default_spec()
    rng = np.random.default_rng(seed)
    width, height = spec.canvas
    lo, hi = spec.size_range

    categories = [
        f"{spec.color_names[rng.integers(len(spec.color_names))]} "
        f"{spec.shapes[rng.integers(len(spec.shapes))]}"
        for _ in range(n_objects)
    ]

    step = spec.position_step
    boxes: list[BoundingBox] | None = None
    for size_hi in range(hi, lo - 1, -1):
        for _ in range(PLACEMENT_ATTEMPTS):
            candidate = []
            for _ in range(n_objects):
                w = int(rng.integers(lo // step, size_hi // step + 1)) * step
                h = int(rng.integers(lo // step, size_hi // step + 1)) * step
                x = int(rng.integers(0, (width - w) // step + 1)) * step
                y = int(rng.integers(0, (height - h) // step + 1)) * step
                candidate.append(BoundingBox(x=x, y=y, w=w, h=h))
            if _boxes_admissible(candidate):
                boxes = candidate
                break
        if boxes is not None:
            break
    if boxes is None:
        raise PlacementFailure(
            f"could not place {n_objects} objects on {width}x{height} canvas")

    order = sorted(range(n_objects), key=lambda k: (boxes[k].center[1], boxes[k].center[0]))
    entities = [Entity(id=rank, category=categories[k]) for rank, k in enumerate(order)]
    ordered_boxes = [boxes[k] for k in order]
    return SceneGraph(
        entities=tuple(entities),
        triplets=tuple(canonical_triplets(entities, ordered_boxes)),
        canvas=spec.canvas,
    )


# --- rendering -------------------------------------------------------------------

def render(graph: SceneGraph, spec: DomainSpec | None = None) -> np.ndarray:
    """Draw the graph's entities on a white canvas; (H, W, 3) float32 in [0, 1].

    An entity's box is its first triplet occurrence; entities that appear
    in no triplet have no box and are skipped.
    """
    spec = spec or default_spec()
    width, height = spec.canvas
    if graph.canvas != spec.canvas:
        raise DimensionMismatch(f"graph canvas {graph.canvas} != spec canvas {spec.canvas}")
    image = np.ones((height, width, 3), dtype=np.float32)
    for ent in graph.entities:
        box = graph.entity_box(ent.id)
        if box is None:
            continue
        color_name, shape = split_category(ent.category)
        if shape not in spec.shapes:
            raise UnknownCategory(f"shape {shape!r} not in domain")
        rgb = spec.rgb(color_name)
        mask = shape_mask(shape, box.w, box.h)
        region = image[box.y:box.y + box.h, box.x:box.x + box.w]
        region[mask] = np.asarray(rgb, dtype=np.float32)
    return image


# --- detection ----------------------------------------------------------------------

def color_palette(spec: DomainSpec) -> tuple[list[str], np.ndarray]:
    names = ["white"] + list(spec.color_names)
    values = np.asarray([(1.0, 1.0, 1.0)] + [spec.rgb(c) for c in spec.color_names],
                        dtype=np.float32)
    return names, values


def _classify_shape(component: np.ndarray, shapes: tuple[str, ...]) -> str:
    """Best template-IoU match of a boolean component mask; UNKNOWN below floor."""
    h, w = component.shape
    best_shape, best_iou = UNKNOWN, SHAPE_IOU_FLOOR
    for shape in shapes:
        template = shape_mask(shape, w, h)
        inter = np.logical_and(component, template).sum()
        union = np.logical_or(component, template).sum()
        iou = inter / union if union else 0.0
        if iou > best_iou:
            best_shape, best_iou = shape, iou
    return best_shape


def detect(image: np.ndarray, spec: DomainSpec | None = None) -> SceneGraph:
    """Recover a scene graph from an image: the oracle detector.

    Pixels are classified to the nearest palette color; per-color
    4-connected components above a small area floor become entities, with
    shapes classified by template IoU. Ambiguous shapes become
    'unknown <color>'-style UNK categories rather than errors.
    """
    spec = spec or default_spec()
    width, height = spec.canvas
    if image.shape != (height, width, 3):
        raise DimensionMismatch(
            f"image shape {image.shape} != canvas ({height}, {width}, 3)")

    names, palette = color_palette(spec)
    dists = ((image[:, :, None, :] - palette[None, None, :, :]) ** 2).sum(axis=-1)
    labels = np.argmin(dists, axis=-1)  # (H, W), 0 = white

    found: list[tuple[float, float, BoundingBox, str]] = []
    for color_idx in range(1, len(names)):
        mask = labels == color_idx
        comp_map, n_comps = ndimage.label(mask)
        for comp_id in range(1, n_comps + 1):
            comp = comp_map == comp_id
            if comp.sum() < MIN_COMPONENT_AREA:
                continue
            ys, xs = np.nonzero(comp)
            y0, y1 = int(ys.min()), int(ys.max())
            x0, x1 = int(xs.min()), int(xs.max())
            box = BoundingBox(x=x0, y=y0, w=x1 - x0 + 1, h=y1 - y0 + 1)
            shape = _classify_shape(comp[y0:y1 + 1, x0:x1 + 1], spec.shapes)
            category = f"{names[color_idx]} {shape}" if shape != UNKNOWN else UNKNOWN
            found.append((box.center[1], box.center[0], box, category))

    found.sort(key=lambda item: (item[0], item[1]))
    entities = [Entity(id=i, category=cat) for i, (_, _, _, cat) in enumerate(found)]
    boxes = [box for _, _, box, _ in found]
    return SceneGraph(
        entities=tuple(entities),
        triplets=tuple(canonical_triplets(entities, boxes)),
        canvas=spec.canvas,
    )
