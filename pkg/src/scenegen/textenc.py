"""Frozen tokenizer and text embedding.

The vocabulary is built once from the domain lexicon and persisted as a
plain text file (one token per line, line number = id). Embeddings are a
seeded random table plus sinusoidal positions; nothing here is ever
updated by training.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import IdOutOfRange

PAD_TOKEN = "<pad>"
PAD_ID = 0
UNK_TOKEN = "<unk>"
UNK_ID = 1
SEP_TOKEN = ","
SEP_ID = 2

RESERVED = (PAD_TOKEN, UNK_TOKEN, SEP_TOKEN)

DEFAULT_D_TEXT = 64
DEFAULT_EMBED_SEED = 1234


def split_text(text: str) -> list[str]:
    """Lowercase and split into word tokens; ',' is its own token."""
    return text.lower().replace(",", " , ").split()


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    index: dict[str, int] = field(compare=False)

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Vocabulary":
        """Build the vocabulary: reserved ids first, then sorted unique words."""
        extra = sorted({w.lower() for w in words} - set(RESERVED))
        tokens = RESERVED + tuple(extra)
        return cls(tokens=tokens, index={t: i for i, t in enumerate(tokens)})

    def encode(self, words: Sequence[str]) -> list[int]:
        return [self.index.get(w, UNK_ID) for w in words]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for token in self.tokens:
                fh.write(token + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            tokens = tuple(line.rstrip("\n") for line in fh)
        return cls(tokens=tokens, index={t: i for i, t in enumerate(tokens)})


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Deterministic tokenization: lowercase, whitespace split, OOV -> UNK."""
    return vocab.encode(split_text(text))


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """Standard interleaved sin/cos position table, shape (length, dim)."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * i / dim)
    table = np.zeros((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table.astype(np.float32)


class TextEncoder:
    """Frozen embedding table over a vocabulary.

    The table is drawn once from a seeded generator at construction and
    never modified afterwards; embed() adds sinusoidal positions.
    """

    def __init__(self, vocab: Vocabulary, d_text: int = DEFAULT_D_TEXT,
                 seed: int = DEFAULT_EMBED_SEED):
        self.vocab = vocab
        self.d_text = d_text
        self.seed = seed
        rng = np.random.default_rng(seed)
        table = rng.normal(0.0, 1.0, size=(len(vocab), d_text)).astype(np.float32)
        table.setflags(write=False)
        self.table = table

    def embed(self, token_ids: Sequence[int]) -> np.ndarray:
        """Embed a token id sequence; shape (len(ids), d_text), float32."""
        ids = np.asarray(list(token_ids), dtype=np.int64)
        if ids.size == 0:
            return np.zeros((0, self.d_text), dtype=np.float32)
        if ids.min() < 0 or ids.max() >= len(self.vocab):
            raise IdOutOfRange(f"token ids must be in [0, {len(self.vocab)})")
        return self.table[ids] + sinusoidal_positions(len(ids), self.d_text)

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed(tokenize(text, self.vocab))


def embed(token_ids: Sequence[int], vocab: Vocabulary, seed: int = DEFAULT_EMBED_SEED,
          d_text: int = DEFAULT_D_TEXT) -> np.ndarray:
    """One-shot embedding; identical to TextEncoder(vocab, d_text, seed).embed(ids)."""
    return TextEncoder(vocab, d_text=d_text, seed=seed).embed(token_ids)
