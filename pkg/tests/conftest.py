import numpy as np
import pytest

from scenegen import bundle as bundle_mod
from scenegen import synthdata, textenc, vq
from scenegen.armodel import ModelConfig, SampleConfig, TrainConfig
from scenegen.graph import BoundingBox, Entity, SceneGraph, Triplet


def box(x, y, w, h):
    return BoundingBox(x=x, y=y, w=w, h=h)


def make_graph(entities, triplets, canvas=(32, 32)):
    """entities: [(id, category)]; triplets: [(s, rel, o, sbox, obox)]."""
    return SceneGraph(
        entities=tuple(Entity(id=i, category=c) for i, c in entities),
        triplets=tuple(
            Triplet(subject_id=s, relation=r, object_id=o,
                    subject_box=sb, object_box=ob)
            for s, r, o, sb, ob in triplets
        ),
        canvas=canvas,
    )


@pytest.fixture(scope="session")
def spec():
    return synthdata.default_spec()


@pytest.fixture(scope="session")
def small_dataset(spec):
    """60 sampled (graph, render) pairs shared across tests."""
    pairs = []
    for i in range(60):
        graph = synthdata.sample_graph(seed=42 + i, spec=spec, n_objects=2 + i % 3)
        pairs.append((graph, synthdata.render(graph, spec)))
    return pairs


@pytest.fixture(scope="session")
def small_codebook(small_dataset):
    return vq.fit_codebook([img for _, img in small_dataset], k=32, iters=12, seed=0)


@pytest.fixture(scope="session")
def text_encoder(spec):
    return textenc.TextEncoder(bundle_mod.default_vocabulary(spec))


@pytest.fixture(scope="session")
def tiny_bundle(spec, small_dataset, small_codebook, tmp_path_factory):
    """A quickly trained, fully functional bundle for service/CLI tests."""
    encoder = textenc.TextEncoder(bundle_mod.default_vocabulary(spec))
    config = TrainConfig(lr=3e-3, steps=60, batch=8, seed=0)
    model_config = ModelConfig(n_layers=2, n_heads=2, d_model=64,
                               k=small_codebook.k,
                               seq_len=small_codebook.total_tokens)
    params, _ = bundle_mod.train(small_dataset, config, small_codebook, encoder,
                                 model_config=model_config)
    return bundle_mod.Bundle(params=params, codebook=small_codebook,
                             text_encoder=encoder, spec=spec, budget=77,
                             sample_defaults=SampleConfig(temperature=1.0, top_k=8, seed=0))
