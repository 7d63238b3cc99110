"""Evaluation metrics: Fréchet distance, Inception-Score analogue,
cross-modal similarity, relation accuracy, and object-count fidelity.

The feature/class scorer is a small trained classifier over the dominant
(largest) object's category; its penultimate activations are the features
for the Fréchet distance. Absolute values are specific to this synthetic
domain and not comparable to published FID/IS numbers.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from . import synthdata
from .caption import Caption, compile_caption, prune, verbalize_all
from .errors import (
    DegenerateLabels,
    DimMismatch,
    InsufficientSamples,
    NotSymmetric,
    RowNotNormalized,
)
from .graph import SceneGraph
from .optim import Adam
from .synthdata import DomainSpec, detect, relation_between
from .textenc import TextEncoder, tokenize

LOG_FLOOR = 1e-12
SYMMETRY_TOL = 1e-8
JACOBI_SWEEP_TOL = 1e-12

SCORER_MAGIC = b"SGSC"
SCORER_VERSION = 1
DEFAULT_D_FEAT = 32
SCORER_POOL = 8
MIN_COMPONENT_PIXELS = 12  # per-color masks are average-pooled to SCORER_POOL x SCORER_POOL


@dataclass(frozen=True)
class FeatureSet:
    vectors: np.ndarray  # (n, d_feat)
    source: str          # "real" | "generated"

    def __post_init__(self):
        n, d = self.vectors.shape
        if n < d + 1:
            raise InsufficientSamples(
                f"need at least d_feat+1={d + 1} samples for covariance, have {n}")


@dataclass
class EvalReport:
    frechet: float
    inception_score: float
    cross_modal_mean: float
    cross_modal_max: float
    cross_modal_min: float
    relation_accuracy: Optional[float]  # None when no sample had triplets
    object_count_fidelity: Optional[float]
    n_samples: int

    def to_dict(self) -> dict:
        return asdict(self)


# --- matrix square root ---------------------------------------------------------

def jacobi_eigh(matrix: np.ndarray, sweep_tol: float = JACOBI_SWEEP_TOL,
                max_sweeps: int = 64):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps over all (p, q) pairs until the largest off-diagonal element
    falls below sweep_tol relative to the matrix scale.
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1.0)
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diag(a))).max() if n > 1 else 0.0
        if off <= sweep_tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= sweep_tol * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p, rot_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                rot_p, rot_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
                rot_p, rot_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * rot_p - s * rot_q
                v[:, q] = s * rot_p + c * rot_q
    return np.diag(a).copy(), v


def matrix_sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via Jacobi; eigenvalues clamped at 0."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {m.shape}")
    if np.abs(m - m.T).max(initial=0.0) > SYMMETRY_TOL:
        raise NotSymmetric("matrix is not symmetric within 1e-8")
    sym = 0.5 * (m + m.T)
    eigvals, eigvecs = jacobi_eigh(sym)
    root = np.sqrt(np.clip(eigvals, 0.0, None))
    s = (eigvecs * root[None, :]) @ eigvecs.T
    return 0.5 * (s + s.T)


# --- distribution metrics ----------------------------------------------------------

def frechet_distance(real: FeatureSet, gen: FeatureSet) -> float:
    """Fréchet distance between Gaussians fitted to the two feature sets."""
    if real.vectors.shape[1] != gen.vectors.shape[1]:
        raise DimMismatch(
            f"feature dims differ: {real.vectors.shape[1]} vs {gen.vectors.shape[1]}")
    xr = real.vectors.astype(np.float64)
    xg = gen.vectors.astype(np.float64)
    mu_r, mu_g = xr.mean(axis=0), xg.mean(axis=0)
    sig_r = np.cov(xr, rowvar=False, ddof=1)
    sig_g = np.cov(xg, rowvar=False, ddof=1)
    sig_r = np.atleast_2d(sig_r)
    sig_g = np.atleast_2d(sig_g)
    root_r = matrix_sqrt_psd(sig_r)
    inner = root_r @ sig_g @ root_r
    cross = matrix_sqrt_psd(0.5 * (inner + inner.T))
    dist = float(((mu_r - mu_g) ** 2).sum()
                 + np.trace(sig_r) + np.trace(sig_g) - 2.0 * np.trace(cross))
    if dist < -1e-6:
        raise ValueError(f"Fréchet distance came out {dist}, below -1e-6")
    return max(dist, 0.0)


def inception_score(class_probs: np.ndarray) -> float:
    """exp(mean KL(row || marginal)); natural log with a 1e-12 floor."""
    probs = np.asarray(class_probs, dtype=np.float64)
    if probs.ndim != 2:
        raise RowNotNormalized("class_probs must be 2-D (n, C)")
    sums = probs.sum(axis=1)
    if np.abs(sums - 1.0).max(initial=0.0) > 1e-6:
        raise RowNotNormalized("every row must sum to 1 within 1e-6")
    marginal = probs.mean(axis=0)
    log_p = np.log(np.maximum(probs, LOG_FLOOR))
    log_m = np.log(np.maximum(marginal, LOG_FLOOR))
    kl = (probs * (log_p - log_m[None, :])).sum(axis=1)
    return float(np.exp(kl.mean()))


# --- feature / class scorer ---------------------------------------------------------

def _sample_to_grid(mask: np.ndarray, out: int = SCORER_POOL) -> np.ndarray:
    """Nearest-sample a boolean crop onto a fixed out x out grid."""
    h, w = mask.shape
    rows = ((np.arange(out) + 0.5) * h / out).astype(int)
    cols = ((np.arange(out) + 0.5) * w / out).astype(int)
    return mask[np.ix_(rows, cols)].astype(np.float64)


def scorer_inputs(image: np.ndarray, spec: DomainSpec) -> np.ndarray:
    """Deterministic, position-normalized input features per color class.

    For each domain color: total area fraction, the largest connected
    component's aspect and its mask resampled to 8x8 (shape information,
    translation/scale normalized), plus a coarse 4x4 layout map.
    """
    from scipy import ndimage

    names, palette = synthdata.color_palette(spec)
    dists = ((image[:, :, None, :] - palette[None, None, :, :]) ** 2).sum(axis=-1)
    labels = np.argmin(dists, axis=-1)
    h, w = labels.shape
    feats = []
    first_center = (float("inf"), float("inf"))
    first_crop = np.zeros((SCORER_POOL, SCORER_POOL))
    first_color = np.zeros(len(names) - 1)
    for color_idx in range(1, len(names)):
        mask = labels == color_idx
        area = float(mask.mean())
        comp_map, n_comps = ndimage.label(mask)
        best_size = 0
        crop = np.zeros((SCORER_POOL, SCORER_POOL))
        aspect = 0.0
        for comp_id in range(1, n_comps + 1):
            ys, xs = np.nonzero(comp_map == comp_id)
            if ys.size < MIN_COMPONENT_PIXELS:
                continue
            y0, y1, x0, x1 = ys.min(), ys.max(), xs.min(), xs.max()
            this_crop = _sample_to_grid(comp_map[y0:y1 + 1, x0:x1 + 1] == comp_id)
            if ys.size > best_size:
                best_size = ys.size
                crop = this_crop
                aspect = (x1 - x0 + 1) / ((x1 - x0 + 1) + (y1 - y0 + 1))
            center = ((y0 + y1 + 1) / 2.0, (x0 + x1 + 1) / 2.0)
            if center < first_center:
                first_center = center
                first_crop = this_crop
                first_color = np.zeros(len(names) - 1)
                first_color[color_idx - 1] = 1.0
        coarse = mask.reshape(4, h // 4, 4, w // 4).mean(axis=(1, 3))
        feats.append(np.concatenate([[area, aspect], crop.reshape(-1),
                                     coarse.reshape(-1)]))
    # leading-component block: the top-most component's color and shape,
    # matching the scene-label rule so the class is readable from pixels
    feats.append(first_color)
    feats.append(first_crop.reshape(-1))
    return np.concatenate(feats)


def scene_label(graph: SceneGraph) -> str:
    """Class label for the scorer: category of the top-most entity.

    Top-most by box center (cy, cx) is unambiguous on sampled scenes
    (placement enforces distinct rows) and recoverable from pixels, unlike
    a largest-object rule, which ties when two boxes share an area.
    """
    best_cat, best_center = "", (float("inf"), float("inf"))
    for ent in graph.entities:
        box = graph.entity_box(ent.id)
        if box is None:
            continue
        center = (box.center[1], box.center[0])
        if center < best_center:
            best_cat, best_center = ent.category, center
    return best_cat


class SceneScorer:
    """Frozen classifier: pooled color masks -> tanh hidden layer -> softmax.

    features() returns the penultimate activations; class_probs() the
    softmax distribution over the training label set.
    """

    def __init__(self, classes: tuple[str, ...], w1, b1, w2, b2, spec: DomainSpec):
        self.classes = classes
        self.w1, self.b1, self.w2, self.b2 = w1, b1, w2, b2
        self.spec = spec
        for arr in (self.w1, self.b1, self.w2, self.b2):
            arr.setflags(write=False)

    @property
    def d_feat(self) -> int:
        return self.w1.shape[1]

    def features(self, image: np.ndarray) -> np.ndarray:
        x = scorer_inputs(image, self.spec)
        return np.tanh(x @ self.w1 + self.b1)

    def class_probs(self, image: np.ndarray) -> np.ndarray:
        logits = self.features(image) @ self.w2 + self.b2
        e = np.exp(logits - logits.max())
        return e / e.sum()

    def predict(self, image: np.ndarray) -> str:
        return self.classes[int(np.argmax(self.class_probs(image)))]

    def save(self, path) -> None:
        blob = [SCORER_MAGIC, struct.pack("<IIII", SCORER_VERSION,
                                          self.w1.shape[0], self.w1.shape[1],
                                          len(self.classes))]
        for cls in self.classes:
            raw = cls.encode("utf-8")
            blob.append(struct.pack("<I", len(raw)) + raw)
        for arr in (self.w1, self.b1, self.w2, self.b2):
            blob.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        with open(path, "wb") as fh:
            fh.write(b"".join(blob))

    @classmethod
    def load(cls, path, spec: DomainSpec | None = None) -> "SceneScorer":
        spec = spec or synthdata.default_spec()
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob[:4] != SCORER_MAGIC:
            raise ValueError("not a scorer file (bad magic)")
        version, d_in, d_feat, n_classes = struct.unpack_from("<IIII", blob, 4)
        if version != SCORER_VERSION:
            raise ValueError(f"unsupported scorer version {version}")
        offset = 20
        classes = []
        for _ in range(n_classes):
            (length,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            classes.append(blob[offset:offset + length].decode("utf-8"))
            offset += length
        arrays = []
        for shape in ((d_in, d_feat), (d_feat,), (d_feat, n_classes), (n_classes,)):
            count = int(np.prod(shape))
            arrays.append(np.frombuffer(blob, dtype="<f8", count=count,
                                        offset=offset).reshape(shape).copy())
            offset += count * 8
        return cls(tuple(classes), *arrays, spec=spec)


def feature_and_class_model(images: list[np.ndarray], labels: list[str],
                            spec: DomainSpec | None = None,
                            d_feat: int = DEFAULT_D_FEAT, steps: int = 400,
                            lr: float = 1e-2, seed: int = 0) -> SceneScorer:
    """Train the frozen scorer on images with object-derived labels."""
    spec = spec or synthdata.default_spec()
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise DegenerateLabels("need at least 2 distinct classes")
    class_idx = {c: i for i, c in enumerate(classes)}
    x = np.stack([scorer_inputs(img, spec) for img in images])
    y = np.asarray([class_idx[label] for label in labels])
    n, d_in = x.shape
    c = len(classes)

    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, 0.1, size=(d_in, d_feat))
    b1 = np.zeros(d_feat)
    w2 = rng.normal(0.0, 0.1, size=(d_feat, c))
    b2 = np.zeros(c)
    params = [w1, b1, w2, b2]
    opt = Adam(params, beta1=0.9, beta2=0.999)
    rows = np.arange(n)
    for _ in range(steps):
        hidden_in = x @ w1 + b1
        hidden = np.tanh(hidden_in)
        logits = hidden @ w2 + b2
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        probs = e / e.sum(axis=1, keepdims=True)
        dlogits = probs.copy()
        dlogits[rows, y] -= 1.0
        dlogits /= n
        g_w2 = hidden.T @ dlogits
        g_b2 = dlogits.sum(axis=0)
        dhidden = (dlogits @ w2.T) * (1.0 - hidden ** 2)
        g_w1 = x.T @ dhidden
        g_b1 = dhidden.sum(axis=0)
        opt.step(params, [g_w1, g_b1, g_w2, g_b2], lr)
    return SceneScorer(classes, w1, b1, w2, b2, spec)


def scorer_accuracy(scorer: SceneScorer, images: list[np.ndarray],
                    labels: list[str]) -> float:
    hits = sum(scorer.predict(img) == label for img, label in zip(images, labels))
    return hits / len(images)


# --- graph-vs-image fidelity ----------------------------------------------------------

def cross_modal_similarity(caption: Caption, image: np.ndarray, bundle) -> float:
    """Cosine between the caption's pooled embedding and the pooled embedding
    of the caption recompiled from the image's detected graph."""
    encoder: TextEncoder = bundle.text_encoder
    detected = detect(image, bundle.spec)
    detected_caption = compile_caption(detected, bundle.budget)
    a = _pooled_embedding(caption.rendered, encoder)
    b = _pooled_embedding(detected_caption.rendered, encoder)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _pooled_embedding(text: str, encoder: TextEncoder) -> np.ndarray:
    ids = tokenize(text, encoder.vocab)
    if not ids:
        return np.zeros(encoder.d_text, dtype=np.float64)
    return encoder.embed(ids).astype(np.float64).mean(axis=0)


def _post_prune_triplets(graph: SceneGraph):
    kept = prune(verbalize_all(graph), graph)
    return [graph.triplets[p.source_index] for p in kept]


def relation_accuracy(graph: SceneGraph, image: np.ndarray,
                      spec: DomainSpec | None = None) -> Optional[float]:
    """Fraction of post-prune triplets satisfied by some detected entity pair.

    Returns None for graphs with no triplets (excluded from aggregates).
    """
    spec = spec or synthdata.default_spec()
    triplets = _post_prune_triplets(graph)
    if not triplets:
        return None
    detected = detect(image, spec)
    cats = {e.id: e.category for e in graph.entities}
    det_entities = [(e.category, detected.entity_box(e.id)) for e in detected.entities]
    satisfied = 0
    for trip in triplets:
        want_s, want_o = cats[trip.subject_id], cats[trip.object_id]
        for i, (cat_s, box_s) in enumerate(det_entities):
            if cat_s != want_s or box_s is None:
                continue
            hit = False
            for j, (cat_o, box_o) in enumerate(det_entities):
                if i == j or cat_o != want_o or box_o is None:
                    continue
                if relation_between(box_s.center, box_o.center) == trip.relation:
                    hit = True
                    break
            if hit:
                satisfied += 1
                break
    return satisfied / len(triplets)


def object_count_fidelity(graph: SceneGraph, image: np.ndarray,
                          spec: DomainSpec | None = None) -> Optional[float]:
    """Multiset overlap of graph vs detected categories over graph entity count.

    Returns None for graphs with no entities.
    """
    spec = spec or synthdata.default_spec()
    if not graph.entities:
        return None
    detected = detect(image, spec)
    want: dict[str, int] = {}
    for ent in graph.entities:
        want[ent.category] = want.get(ent.category, 0) + 1
    have: dict[str, int] = {}
    for ent in detected.entities:
        have[ent.category] = have.get(ent.category, 0) + 1
    overlap = sum(min(count, have.get(cat, 0)) for cat, count in want.items())
    return overlap / len(graph.entities)
