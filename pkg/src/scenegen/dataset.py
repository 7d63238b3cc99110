"""Dataset generation and on-disk layout.

A dataset directory holds one graph file and one 8-bit RGB PNG per pair,
plus a manifest listing the pairs with their seeds:

    manifest.json
    graphs/pair_00000.json ...
    images/pair_00000.png ...

Pair i is sampled with seed base_seed + i, so generation is resumable and
parallelizable per sample.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .graph import SceneGraph, parse_graph, serialize
from .synthdata import DomainSpec, default_spec, render, sample_graph


def save_image_png(image: np.ndarray, path) -> None:
    """Write a [0,1] float image as 8-bit RGB PNG (deterministic bytes)."""
    data = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
    PILImage.fromarray(data, mode="RGB").save(path, format="PNG")


def load_image_png(path) -> np.ndarray:
    with PILImage.open(path) as img:
        data = np.asarray(img.convert("RGB"), dtype=np.float32)
    return data / 255.0


def generate_dataset(out_dir, n: int, seed: int, spec: DomainSpec | None = None,
                     n_objects_range: tuple[int, int] = (2, 4)) -> dict:
    """Sample n (graph, render) pairs into out_dir; returns the manifest."""
    spec = spec or default_spec()
    out = Path(out_dir)
    (out / "graphs").mkdir(parents=True, exist_ok=True)
    (out / "images").mkdir(parents=True, exist_ok=True)
    lo, hi = n_objects_range
    counts = np.random.default_rng(seed).integers(lo, hi + 1, size=n)
    pairs = []
    for i in range(n):
        pair_seed = seed + i
        graph = sample_graph(pair_seed, spec, n_objects=int(counts[i]))
        graph_rel = f"graphs/pair_{i:05d}.json"
        image_rel = f"images/pair_{i:05d}.png"
        (out / graph_rel).write_text(serialize(graph), encoding="utf-8")
        save_image_png(render(graph, spec), out / image_rel)
        pairs.append({"graph": graph_rel, "image": image_rel,
                      "seed": pair_seed, "n_objects": int(counts[i])})
    manifest = {
        "seed": seed,
        "count": n,
        "canvas": [spec.canvas[0], spec.canvas[1]],
        "n_objects_range": [lo, hi],
        "pairs": pairs,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def load_dataset(data_dir) -> list[tuple[SceneGraph, np.ndarray]]:
    """Load all (graph, image) pairs listed in a dataset manifest."""
    root = Path(data_dir)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    out = []
    for pair in manifest["pairs"]:
        graph = parse_graph((root / pair["graph"]).read_text(encoding="utf-8"))
        image = load_image_png(root / pair["image"])
        out.append((graph, image))
    return out
