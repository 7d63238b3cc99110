import numpy as np
import pytest

from scenegen.errors import IdOutOfRange
from scenegen.textenc import (
    PAD_ID,
    SEP_ID,
    UNK_ID,
    TextEncoder,
    Vocabulary,
    sinusoidal_positions,
    split_text,
    tokenize,
)


@pytest.fixture(scope="module")
def vocab():
    return Vocabulary.from_words(
        ["red", "blue", "circle", "square", "above", "below", "left", "of"])


def test_reserved_ids(vocab):
    assert vocab.tokens[PAD_ID] == "<pad>"
    assert vocab.tokens[UNK_ID] == "<unk>"
    assert vocab.tokens[SEP_ID] == ","


def test_ids_dense_bijection(vocab):
    assert sorted(vocab.index.values()) == list(range(len(vocab)))
    assert len(set(vocab.tokens)) == len(vocab.tokens)


def test_tokenize_empty(vocab):
    assert tokenize("", vocab) == []


def test_tokenize_caption_all_known(vocab):
    ids = tokenize("red circle above blue square", vocab)
    assert len(ids) == 5
    assert UNK_ID not in ids


def test_tokenize_oov(vocab):
    assert tokenize("xyzzy", vocab) == [UNK_ID]


def test_tokenize_comma_is_separator(vocab):
    ids = tokenize("red circle, blue square", vocab)
    assert ids[2] == SEP_ID
    assert len(ids) == 5


def test_split_text_lowercases():
    assert split_text("Red CIRCLE") == ["red", "circle"]


def test_vocab_persistence_roundtrip(vocab, tmp_path):
    path = tmp_path / "vocab.txt"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert loaded.tokens == vocab.tokens
    # one token per line, line number = id
    lines = path.read_text().splitlines()
    assert lines[SEP_ID] == ","


def test_embed_empty(vocab):
    enc = TextEncoder(vocab)
    out = enc.embed([])
    assert out.shape == (0, enc.d_text)


def test_embed_position_term_differs(vocab):
    enc = TextEncoder(vocab)
    out = enc.embed([3, 3])
    assert not np.array_equal(out[0], out[1])


def test_embed_deterministic(vocab):
    a = TextEncoder(vocab, seed=99).embed([1, 2, 3])
    b = TextEncoder(vocab, seed=99).embed([1, 2, 3])
    assert np.array_equal(a, b)


def test_embed_seed_changes_table(vocab):
    a = TextEncoder(vocab, seed=1).embed([1, 2])
    b = TextEncoder(vocab, seed=2).embed([1, 2])
    assert not np.array_equal(a, b)


def test_embed_rejects_out_of_range(vocab):
    enc = TextEncoder(vocab)
    with pytest.raises(IdOutOfRange):
        enc.embed([len(vocab)])


def test_order_sensitivity(vocab):
    enc = TextEncoder(vocab)
    ab = enc.embed([3, 4])
    ba = enc.embed([4, 3])
    assert not np.array_equal(ab, ba)


def test_embeddings_finite(vocab):
    enc = TextEncoder(vocab)
    out = enc.embed(list(range(len(vocab))))
    assert np.isfinite(out).all()


def test_sinusoidal_shape_and_range():
    table = sinusoidal_positions(10, 8)
    assert table.shape == (10, 8)
    assert np.abs(table).max() <= 1.0 + 1e-6
