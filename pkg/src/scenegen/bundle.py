"""Model bundle: checkpoint + codebook + vocabulary, end-to-end generation,
and the evaluation runner.

A bundle is only usable when its parts agree: the checkpoint stores the
sha256 of the vocabulary and codebook files it was trained with, and
loading verifies them along with the architecture constants.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import armodel
from .armodel import ModelConfig, ModelParams, SampleConfig, TrainConfig
from .caption import Caption, compile_caption
from .dataset import load_dataset
from .errors import BundleMismatch, EmptyDataset
from .graph import SceneGraph
from .metrics import (
    EvalReport,
    FeatureSet,
    SceneScorer,
    cross_modal_similarity,
    scene_label,
    feature_and_class_model,
    frechet_distance,
    inception_score,
    object_count_fidelity,
    relation_accuracy,
)
from .synthdata import DomainSpec, default_spec, lexicon_words, render, sample_graph
from .textenc import TextEncoder, Vocabulary, tokenize
from .vq import Codebook, TokenGrid, decode, encode, load_codebook

DEFAULT_BUDGET = 77
HELD_OUT_SEED_OFFSET = 10_000_000


@dataclass
class Bundle:
    params: ModelParams
    codebook: Codebook
    text_encoder: TextEncoder
    spec: DomainSpec
    budget: int
    sample_defaults: SampleConfig

    def check(self) -> None:
        cfg = self.params.config
        if cfg.k != self.codebook.k:
            raise BundleMismatch(f"model k={cfg.k} != codebook k={self.codebook.k}")
        if cfg.seq_len != self.codebook.total_tokens:
            raise BundleMismatch(
                f"model seq_len={cfg.seq_len} != codebook tokens={self.codebook.total_tokens}")
        if cfg.d_text != self.text_encoder.d_text:
            raise BundleMismatch(
                f"model d_text={cfg.d_text} != encoder d_text={self.text_encoder.d_text}")


@dataclass
class GenerationResult:
    image: np.ndarray
    caption: Caption
    tokens: TokenGrid


def default_vocabulary(spec: DomainSpec | None = None) -> Vocabulary:
    return Vocabulary.from_words(lexicon_words(spec or default_spec()))


def condition_for_graph(graph: SceneGraph, bundle: Bundle) -> tuple[Caption, np.ndarray]:
    caption = compile_caption(graph, bundle.budget)
    ids = tokenize(caption.rendered, bundle.text_encoder.vocab)
    return caption, bundle.text_encoder.embed(ids)


def generate(graph: SceneGraph, bundle: Bundle, seed: int | None = None,
             temperature: float | None = None, top_k: int | None = None) -> GenerationResult:
    """compile -> tokenize -> embed -> sample -> decode; seeded and deterministic."""
    bundle.check()
    config = bundle.sample_defaults
    if seed is not None:
        config = replace(config, seed=seed)
    if temperature is not None:
        config = replace(config, temperature=temperature)
    if top_k is not None:
        config = replace(config, top_k=top_k)
    caption, condition = condition_for_graph(graph, bundle)
    tokens = armodel.sample(bundle.params, condition, config, bundle.codebook.scales)
    return GenerationResult(image=decode(tokens, bundle.codebook),
                            caption=caption, tokens=tokens)


# --- training orchestration ---------------------------------------------------------

def prepare_examples(dataset, codebook: Codebook, text_encoder: TextEncoder,
                     budget: int, unconditional: bool = False):
    """Precompute (condition embedding, target token) pairs for training.

    unconditional=True forces an empty caption (budget 0 equivalent), the
    text-free baseline used for Fréchet comparisons.
    """
    if not dataset:
        raise EmptyDataset("dataset is empty")
    examples = []
    for graph, image in dataset:
        if unconditional:
            condition = np.zeros((0, text_encoder.d_text), dtype=np.float32)
        else:
            caption = compile_caption(graph, budget)
            condition = text_encoder.embed(tokenize(caption.rendered, text_encoder.vocab))
        target = encode(image, codebook).flat().astype(np.int64)
        examples.append((condition, target))
    return examples


def train(dataset, config: TrainConfig, codebook: Codebook,
          text_encoder: TextEncoder, budget: int = DEFAULT_BUDGET,
          model_config: ModelConfig | None = None, unconditional: bool = False,
          callback=None):
    """Train a model against frozen codebook and text encoder.

    Returns (params, loss_curve). The codebook and embedding table are
    inputs only; nothing here writes to them.
    """
    if model_config is None:
        model_config = ModelConfig(k=codebook.k, seq_len=codebook.total_tokens,
                                   d_text=text_encoder.d_text)
    examples = prepare_examples(dataset, codebook, text_encoder, budget,
                                unconditional=unconditional)
    return armodel.train_tokenized(examples, config, model_config, callback=callback)


# --- bundle I/O ------------------------------------------------------------------------

def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def save_bundle(ckpt_path, params: ModelParams, budget: int,
                text_encoder: TextEncoder, vocab_path, codebook_path) -> None:
    vocab_sha = armodel.file_sha256(vocab_path)
    codebook_sha = armodel.file_sha256(codebook_path)
    armodel.save_checkpoint(ckpt_path, params, budget, text_encoder.seed,
                            vocab_sha, codebook_sha)


def load_bundle(ckpt_path, codebook_path, vocab_path,
                spec: DomainSpec | None = None,
                sample_defaults: SampleConfig | None = None) -> Bundle:
    """Load and cross-check a bundle; raises BundleMismatch on any drift."""
    spec = spec or default_spec()
    params, budget, text_seed, vocab_sha, codebook_sha = armodel.load_checkpoint(ckpt_path)
    actual_vocab_sha = armodel.file_sha256(vocab_path)
    if actual_vocab_sha != vocab_sha:
        raise BundleMismatch(
            f"vocabulary hash mismatch: checkpoint has {vocab_sha[:12]}…, "
            f"file is {actual_vocab_sha[:12]}…")
    actual_codebook_sha = armodel.file_sha256(codebook_path)
    if actual_codebook_sha != codebook_sha:
        raise BundleMismatch(
            f"codebook hash mismatch: checkpoint has {codebook_sha[:12]}…, "
            f"file is {actual_codebook_sha[:12]}…")
    vocab = Vocabulary.load(vocab_path)
    codebook = load_codebook(codebook_path)
    encoder = TextEncoder(vocab, d_text=params.config.d_text, seed=text_seed)
    if sample_defaults is None:
        sample_defaults = SampleConfig(temperature=1.0, top_k=params.config.k, seed=0)
    bundle = Bundle(params=params, codebook=codebook, text_encoder=encoder,
                    spec=spec, budget=budget, sample_defaults=sample_defaults)
    bundle.check()
    return bundle


# --- evaluation runner -------------------------------------------------------------------

def held_out_graphs(seed: int, n: int, spec: DomainSpec,
                    n_objects_range: tuple[int, int] = (2, 4)) -> list[SceneGraph]:
    counts = np.random.default_rng(seed + HELD_OUT_SEED_OFFSET).integers(
        n_objects_range[0], n_objects_range[1] + 1, size=n)
    return [sample_graph(seed + HELD_OUT_SEED_OFFSET + 1 + i, spec, int(counts[i]))
            for i in range(n)]


def evaluate(bundle: Bundle, data_dir, n: int, seed: int,
             scorer: SceneScorer | None = None,
             temperature: float | None = None, top_k: int | None = None):
    """Evaluate a bundle on n fresh held-out graphs.

    Real-side statistics come from oracle renders of the held-out graphs;
    the scorer is trained on the dataset under data_dir (unless one is
    passed in). Returns (EvalReport, per-sample rows, scorer).
    """
    dataset = load_dataset(data_dir)
    if scorer is None:
        images = [img for _, img in dataset]
        labels = [scene_label(graph) for graph, _ in dataset]
        scorer = feature_and_class_model(images, labels, spec=bundle.spec, seed=seed)

    graphs = held_out_graphs(seed, n, bundle.spec)
    real_feats, gen_feats, gen_probs = [], [], []
    rows = []
    sims, rels, counts = [], [], []
    for i, graph in enumerate(graphs):
        real = render(graph, bundle.spec)
        result = generate(graph, bundle, seed=seed + i,
                          temperature=temperature, top_k=top_k)
        real_feats.append(scorer.features(real))
        gen_feats.append(scorer.features(result.image))
        gen_probs.append(scorer.class_probs(result.image))
        sim = cross_modal_similarity(result.caption, result.image, bundle)
        rel = relation_accuracy(graph, result.image, bundle.spec)
        cnt = object_count_fidelity(graph, result.image, bundle.spec)
        sims.append(sim)
        if rel is not None:
            rels.append(rel)
        if cnt is not None:
            counts.append(cnt)
        rows.append({
            "index": i,
            "caption": result.caption.rendered,
            "cross_modal_similarity": sim,
            "relation_accuracy": rel,
            "object_count_fidelity": cnt,
        })
    report = EvalReport(
        frechet=frechet_distance(FeatureSet(np.stack(real_feats), "real"),
                                 FeatureSet(np.stack(gen_feats), "generated")),
        inception_score=inception_score(np.stack(gen_probs)),
        cross_modal_mean=float(np.mean(sims)),
        cross_modal_max=float(np.max(sims)),
        cross_modal_min=float(np.min(sims)),
        relation_accuracy=float(np.mean(rels)) if rels else None,
        object_count_fidelity=float(np.mean(counts)) if counts else None,
        n_samples=n,
    )
    return report, rows, scorer
