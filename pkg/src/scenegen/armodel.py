"""Small causal transformer over flattened multi-scale visual tokens.

The visual token sequence (coarse-first, raster order within each scale,
BOS prepended) is modeled autoregressively, conditioned on a projected
text-embedding prefix: text positions attend acausally among themselves,
visual positions attend causally to earlier visual positions and to all
text positions. Everything is numpy with hand-written backprop, so the
gradients can be checked against finite differences exactly.

Checkpoint layout (little-endian, see docs/formats.md):
    magic b"SGCK", u32 version,
    u32 n_layers, n_heads, d_model, d_text, k, seq_len,
    i64 budget, i64 text_seed,
    32-byte vocab sha256, 32-byte codebook sha256,
    float32 parameter blobs in canonical key order.
"""

from __future__ import annotations

import hashlib
import math
import struct
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDataset, ShapeMismatch
from .optim import Adam, clip_global_norm, cosine_lr
from .textenc import sinusoidal_positions
from .vq import ScaleSpec, TokenGrid

MAGIC = b"SGCK"
VERSION = 1

NEG_INF = -1e30
LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int = 4
    n_heads: int = 4
    d_model: int = 128
    d_text: int = 64
    k: int = 64          # codebook size; BOS embedding row is index k
    seq_len: int = 80    # total visual tokens L

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    @property
    def d_ff(self) -> int:
        # 2x instead of the usual 4x: trains in minutes on one CPU core
        return 2 * self.d_model


@dataclass
class TrainConfig:
    # from-scratch training needs a higher rate than the 3e-4 typical for
    # fine-tuning: at 3e-4 the desk run plateaus far above the entropy floor
    lr: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.95
    clip: float = 1.0
    steps: int = 8000
    batch: int = 16
    seed: int = 0
    schedule: str = "cosine"  # "cosine" | "constant"

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must be in (0, 1)")
        if self.clip <= 0:
            raise ValueError("clip must be > 0")
        if self.schedule not in ("cosine", "constant"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass
class SampleConfig:
    temperature: float = 1.0
    top_k: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


def _param_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical parameter order; checkpoints and flat gradients follow it."""
    d, ff = config.d_model, config.d_ff
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("tok_embed", (config.k + 1, d)),
        ("text_proj", (config.d_text, d)),
    ]
    for i in range(config.n_layers):
        shapes += [
            (f"blocks.{i}.ln1_g", (d,)), (f"blocks.{i}.ln1_b", (d,)),
            (f"blocks.{i}.wq", (d, d)), (f"blocks.{i}.wk", (d, d)),
            (f"blocks.{i}.wv", (d, d)), (f"blocks.{i}.wo", (d, d)),
            (f"blocks.{i}.ln2_g", (d,)), (f"blocks.{i}.ln2_b", (d,)),
            (f"blocks.{i}.w1", (d, ff)), (f"blocks.{i}.b1", (ff,)),
            (f"blocks.{i}.w2", (ff, d)), (f"blocks.{i}.b2", (d,)),
        ]
    shapes += [("ln_f_g", (d,)), ("ln_f_b", (d,)), ("head", (d, config.k))]
    return shapes


@dataclass
class ModelParams:
    config: ModelConfig
    values: dict[str, np.ndarray] = field(default_factory=dict)

    def keys(self) -> list[str]:
        return [name for name, _ in _param_shapes(self.config)]

    def arrays(self) -> list[np.ndarray]:
        return [self.values[name] for name in self.keys()]

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.values.items()}

    @property
    def dtype(self):
        return self.values["head"].dtype

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(self.config,
                           {k: v.astype(dtype) for k, v in self.values.items()})

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.values.items()})


def init_params(config: ModelConfig, seed: int, dtype=np.float32) -> ModelParams:
    """Seeded init: N(0, 0.02) weights, unit LN gains, zero biases.

    The output head starts at zero so the step-0 loss is exactly ln K.
    """
    rng = np.random.default_rng(seed)
    values: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(config):
        leaf = name.rsplit(".", 1)[-1]
        if leaf in ("ln1_g", "ln2_g", "ln_f_g"):
            arr = np.ones(shape)
        elif leaf in ("ln1_b", "ln2_b", "ln_f_b", "b1", "b2") or name == "head":
            arr = np.zeros(shape)
        else:
            arr = rng.normal(0.0, 0.02, size=shape)
        values[name] = arr.astype(dtype)
    return ModelParams(config, values)


def zero_params(config: ModelConfig, dtype=np.float32) -> ModelParams:
    return ModelParams(config, {name: np.zeros(shape, dtype=dtype)
                                for name, shape in _param_shapes(config)})


# --- primitives -----------------------------------------------------------------

def _layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mean) * inv_std
    return xhat * g + b, (xhat, inv_std)


def _layer_norm_backward(dy, cache, g):
    # inputs are (B, S, d); parameter grads reduce over S per example, then
    # over examples, so results are invariant to duplicating a batch item
    xhat, inv_std = cache
    dg = (dy * xhat).sum(axis=1).sum(axis=0)
    db = dy.sum(axis=1).sum(axis=0)
    dxhat = dy * g
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv_std * (dxhat - m1 - xhat * m2)
    return dx, dg, db


def _gelu(x: np.ndarray):
    # x*x*x instead of x**3: np.power is an order of magnitude slower
    inner = _GELU_C * (x + 0.044715 * (x * x * x))
    t = np.tanh(inner)
    return 0.5 * x * (1.0 + t), t


def _gelu_backward(dy, x, t):
    d_inner = _GELU_C * (1.0 + 3 * 0.044715 * (x * x))
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner)


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@lru_cache(maxsize=512)
def _attention_mask(t_text: int, n_visual: int, dtype_name: str) -> np.ndarray:
    """(S, S) additive bias: text rows see all text; visual rows see text
    plus visual positions up to and including themselves."""
    s = t_text + n_visual
    allowed = np.zeros((s, s), dtype=bool)
    allowed[:t_text, :t_text] = True
    vis = np.arange(n_visual)
    allowed[t_text:, :t_text] = True
    allowed[t_text:, t_text:] = vis[:, None] >= vis[None, :]
    bias = np.where(allowed, 0.0, NEG_INF).astype(dtype_name)
    bias.setflags(write=False)
    return bias


@lru_cache(maxsize=512)
def _mask_static(t_max: int, n_visual: int) -> np.ndarray:
    """Length-independent mask part: text-row self loops + visual causality."""
    s = t_max + n_visual
    allowed = np.zeros((s, s), dtype=bool)
    idx = np.arange(t_max)
    allowed[idx, idx] = True  # pad text rows still attend to themselves
    vis = np.arange(n_visual)
    allowed[t_max:, t_max:] = vis[:, None] >= vis[None, :]
    allowed.setflags(write=False)
    return allowed


def _attention_mask_padded(t_lens: np.ndarray, t_max: int, n_visual: int,
                           dtype) -> np.ndarray:
    """(B, S, S) additive bias for a padded batch: every row additionally
    sees columns j < t_len of its own example."""
    s = t_max + n_visual
    col_text = np.arange(s)[None, :] < t_lens[:, None]  # (B, S)
    allowed = np.logical_or(_mask_static(t_max, n_visual)[None, :, :],
                            col_text[:, None, :])
    return np.where(allowed, 0.0, NEG_INF).astype(dtype)


@lru_cache(maxsize=512)
def _vis_positions(n: int, d_model: int, dtype_name: str) -> np.ndarray:
    table = sinusoidal_positions(n, d_model).astype(dtype_name)
    table.setflags(write=False)
    return table


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    b, s, d = x.shape
    return x.reshape(b, s, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, s, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, s, h * dh)


# --- forward / backward -------------------------------------------------------------

def _mm(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(B, S, d) @ (d, e) as one 2-D GEMM."""
    b, s, d = x.shape
    return (x.reshape(b * s, d) @ w).reshape(b, s, w.shape[1])


def _forward_batch(params: ModelParams, cond: np.ndarray, tokens: np.ndarray,
                   t_lens: np.ndarray | None = None):
    """Batched forward. cond (B, T, d_text), tokens (B, P) int.

    When t_lens is given, cond is zero-padded to a common length and each
    example attends only to its own t_lens[i] leading text positions.
    Returns logits (B, P+1, k) and the cache for backprop.
    """
    cfg = params.config
    val = params.values
    dtype = params.dtype
    b, t_text = cond.shape[0], cond.shape[1]
    p = tokens.shape[1]
    if p + 1 > cfg.seq_len + 1:
        raise ShapeMismatch(f"prefix length {p} exceeds seq_len {cfg.seq_len}")
    if cond.shape[2] != cfg.d_text:
        raise ShapeMismatch(f"condition dim {cond.shape[2]} != d_text {cfg.d_text}")

    ids = np.concatenate(
        [np.full((b, 1), cfg.k, dtype=np.int64), tokens.astype(np.int64)], axis=1)
    vis_pos = _vis_positions(p + 1, cfg.d_model, np.dtype(dtype).name)
    cond = cond.astype(dtype)
    x_text = _mm(cond, val["text_proj"])
    x_vis = val["tok_embed"][ids] + vis_pos[None]
    x = np.concatenate([x_text, x_vis], axis=1)
    if t_lens is None:
        bias = _attention_mask(t_text, p + 1, np.dtype(dtype).name)
    else:
        bias = _attention_mask_padded(t_lens, t_text, p + 1, dtype)[:, None, :, :]

    cache = {"cond": cond, "ids": ids, "t_text": t_text, "blocks": []}
    scale = 1.0 / math.sqrt(cfg.d_head)
    d = cfg.d_model
    for i in range(cfg.n_layers):
        pre = f"blocks.{i}."
        a, ln1_cache = _layer_norm(x, val[pre + "ln1_g"], val[pre + "ln1_b"])
        wqkv = np.concatenate(
            [val[pre + "wq"], val[pre + "wk"], val[pre + "wv"]], axis=1)
        qkv = _mm(a, wqkv)
        q = _split_heads(qkv[:, :, :d], cfg.n_heads)
        k = _split_heads(qkv[:, :, d:2 * d], cfg.n_heads)
        v = _split_heads(qkv[:, :, 2 * d:], cfg.n_heads)
        scores = np.matmul(q, k.transpose(0, 1, 3, 2))
        scores *= scale
        scores += bias
        probs = _softmax(scores)
        ctx = _merge_heads(np.matmul(probs, v))
        attn = _mm(ctx, val[pre + "wo"])
        x1 = x + attn
        h, ln2_cache = _layer_norm(x1, val[pre + "ln2_g"], val[pre + "ln2_b"])
        u = _mm(h, val[pre + "w1"]) + val[pre + "b1"]
        act, tanh_cache = _gelu(u)
        f = _mm(act, val[pre + "w2"]) + val[pre + "b2"]
        x2 = x1 + f
        cache["blocks"].append({
            "x": x, "a": a, "ln1": ln1_cache, "q": q, "k": k, "v": v,
            "probs": probs, "ctx": ctx, "x1": x1, "h": h, "ln2": ln2_cache,
            "u": u, "act": act, "tanh": tanh_cache,
        })
        x = x2
    y, lnf_cache = _layer_norm(x, val["ln_f_g"], val["ln_f_b"])
    logits = _mm(np.ascontiguousarray(y[:, t_text:, :]), val["head"])
    cache.update({"x_final": x, "lnf": lnf_cache, "y": y})
    return logits, cache


def _per_example_outer(a: np.ndarray, g: np.ndarray) -> np.ndarray:
    """sum_b a_b^T g_b via batched GEMM; per-example products summed in
    example order so duplicated examples reduce exactly."""
    return np.matmul(a.transpose(0, 2, 1), g).sum(axis=0)


def _backward_batch(params: ModelParams, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    cfg = params.config
    val = params.values
    t_text = cache["t_text"]
    grads = {name: np.zeros_like(arr) for name, arr in val.items()}

    y = cache["y"]
    grads["head"] += _per_example_outer(y[:, t_text:, :], dlogits)
    dy = np.zeros_like(y)
    dy[:, t_text:, :] = _mm(dlogits, val["head"].T)
    dx, dg, db = _layer_norm_backward(dy, cache["lnf"], val["ln_f_g"])
    grads["ln_f_g"] += dg
    grads["ln_f_b"] += db

    scale = 1.0 / math.sqrt(cfg.d_head)
    d = cfg.d_model
    for i in reversed(range(cfg.n_layers)):
        pre = f"blocks.{i}."
        blk = cache["blocks"][i]
        # feed-forward path
        df = dx
        grads[pre + "b2"] += df.sum(axis=1).sum(axis=0)
        grads[pre + "w2"] += _per_example_outer(blk["act"], df)
        dact = _mm(df, val[pre + "w2"].T)
        du = _gelu_backward(dact, blk["u"], blk["tanh"])
        grads[pre + "b1"] += du.sum(axis=1).sum(axis=0)
        grads[pre + "w1"] += _per_example_outer(blk["h"], du)
        dh = _mm(du, val[pre + "w1"].T)
        dx1_ln, dg, db = _layer_norm_backward(dh, blk["ln2"], val[pre + "ln2_g"])
        grads[pre + "ln2_g"] += dg
        grads[pre + "ln2_b"] += db
        dx1 = dx + dx1_ln
        # attention path
        dattn = dx1
        grads[pre + "wo"] += _per_example_outer(blk["ctx"], dattn)
        dctx = _split_heads(_mm(dattn, val[pre + "wo"].T), cfg.n_heads)
        dprobs = np.matmul(dctx, blk["v"].transpose(0, 1, 3, 2))
        dv = np.matmul(blk["probs"].transpose(0, 1, 3, 2), dctx)
        probs = blk["probs"]
        dscores = probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))
        dq = np.matmul(dscores, blk["k"])
        dq *= scale
        dk = np.matmul(dscores.transpose(0, 1, 3, 2), blk["q"])
        dk *= scale
        dqkv = np.concatenate(
            [_merge_heads(dq), _merge_heads(dk), _merge_heads(dv)], axis=2)
        wqkv = np.concatenate(
            [val[pre + "wq"], val[pre + "wk"], val[pre + "wv"]], axis=1)
        da = _mm(dqkv, wqkv.T)
        dwqkv = _per_example_outer(blk["a"], dqkv)
        grads[pre + "wq"] += dwqkv[:, :d]
        grads[pre + "wk"] += dwqkv[:, d:2 * d]
        grads[pre + "wv"] += dwqkv[:, 2 * d:]
        dx_ln, dg, db = _layer_norm_backward(da, blk["ln1"], val[pre + "ln1_g"])
        grads[pre + "ln1_g"] += dg
        grads[pre + "ln1_b"] += db
        dx = dx1 + dx_ln

    # embeddings: one-hot matmul keeps per-example reduction order
    dcond_proj = np.ascontiguousarray(dx[:, :t_text, :])
    grads["text_proj"] += _per_example_outer(cache["cond"], dcond_proj)
    dvis = np.ascontiguousarray(dx[:, t_text:, :])
    b, n_vis = cache["ids"].shape
    onehot = np.zeros((b, n_vis, cfg.k + 1), dtype=params.dtype)
    onehot[np.arange(b)[:, None], np.arange(n_vis)[None, :], cache["ids"]] = 1.0
    grads["tok_embed"] += _per_example_outer(onehot, dvis)
    return grads


def _loss_from_logits(logits: np.ndarray, targets: np.ndarray):
    """Cross-entropy in float64. Returns (per-example losses (b,), dlogits).

    dlogits is scaled for the mean over all (batch, position) cells.
    """
    b, n, k = logits.shape
    l64 = logits.astype(np.float64)
    m = l64.max(axis=-1, keepdims=True)
    e = np.exp(l64 - m)
    z = e.sum(axis=-1, keepdims=True)
    log_probs = (l64 - m) - np.log(z)
    bi = np.arange(b)[:, None]
    ni = np.arange(n)[None, :]
    losses = -log_probs[bi, ni, targets].mean(axis=1)
    dlogits = e / z
    dlogits[bi, ni, targets] -= 1.0
    dlogits /= b * n
    return losses, dlogits


# --- public single-example ops ---------------------------------------------------------

def forward(params: ModelParams, condition: np.ndarray, tokens) -> np.ndarray:
    """Logits (len(tokens)+1, k); row i predicts visual token i given tokens < i."""
    tokens = np.asarray(tokens, dtype=np.int64).reshape(1, -1)
    condition = np.asarray(condition)
    if condition.ndim != 2:
        raise ShapeMismatch("condition must be (T, d_text)")
    logits, _ = _forward_batch(params, condition[None], tokens)
    return logits[0]


def nll_loss(params: ModelParams, condition: np.ndarray, target) -> float:
    """Mean over positions of -log p(target_i | target_<i, condition)."""
    target = np.asarray(target, dtype=np.int64)
    if target.shape != (params.config.seq_len,):
        raise ShapeMismatch(f"target must have length {params.config.seq_len}")
    logits, _ = _forward_batch(params, np.asarray(condition)[None],
                               target[None, :-1])
    losses, _ = _loss_from_logits(logits, target[None])
    return float(losses[0])


def gradients(params: ModelParams, batch) -> tuple[dict[str, np.ndarray], float]:
    """Exact gradients of the batch-mean nll_loss.

    batch: list of (condition (T_i, d_text), target (L,)) pairs. Conditions
    are zero-padded to a common length with per-example masking; all
    parameter-gradient reductions run per example before summing, so the
    result is deterministic and exactly invariant to duplicating examples.
    """
    if not batch:
        raise EmptyDataset("gradients needs a nonempty batch")
    n = len(batch)
    conds = [np.asarray(c) for c, _ in batch]
    t_lens = np.asarray([c.shape[0] for c in conds])
    t_max = int(t_lens.max())
    cond = np.zeros((n, t_max, params.config.d_text), dtype=params.dtype)
    for i, c in enumerate(conds):
        cond[i, :c.shape[0]] = c
    targets = np.stack([np.asarray(t, dtype=np.int64) for _, t in batch])
    logits, cache = _forward_batch(params, cond, targets[:, :-1], t_lens=t_lens)
    losses, dlogits = _loss_from_logits(logits, targets)
    grads = _backward_batch(params, cache, dlogits.astype(params.dtype))
    return grads, float(losses.mean())


# --- sampling -----------------------------------------------------------------------

def topk_distribution(logits: np.ndarray, temperature: float, top_k: int):
    """Temperature-scaled softmax restricted to the top_k logits.

    Ties are broken toward lower indices; the renormalized probabilities
    sum to 1 exactly up to one rounding step.
    """
    k = logits.shape[0]
    top_k = min(top_k, k)
    order = np.lexsort((np.arange(k), -logits))
    selected = order[:top_k]
    scaled = logits[selected].astype(np.float64) / temperature
    probs = _softmax(scaled)
    return selected, probs / probs.sum()


def sample_step(logits: np.ndarray, config: SampleConfig, rng: np.random.Generator) -> int:
    """Draw one token from the temperature-scaled, top-k-restricted softmax."""
    selected, probs = topk_distribution(logits, config.temperature, config.top_k)
    if selected.shape[0] == 1:
        return int(selected[0])
    return int(rng.choice(selected, p=probs))


def sample_flat(params: ModelParams, condition: np.ndarray,
                config: SampleConfig) -> np.ndarray:
    """Sequentially sample all seq_len visual tokens; deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    tokens: list[int] = []
    for _ in range(params.config.seq_len):
        logits = forward(params, condition, tokens)
        tokens.append(sample_step(logits[-1], config, rng))
    return np.asarray(tokens, dtype=np.int32)


def sample(params: ModelParams, condition: np.ndarray, config: SampleConfig,
           scales: tuple[ScaleSpec, ...]) -> TokenGrid:
    return TokenGrid.from_flat(sample_flat(params, condition, config), scales)


# --- training ----------------------------------------------------------------------

def train_tokenized(examples: list[tuple[np.ndarray, np.ndarray]],
                    config: TrainConfig, model_config: ModelConfig,
                    dtype=np.float32, callback=None):
    """Train on precomputed (condition, target) pairs.

    Per step: sample a batch, compute exact gradients, clip the global
    norm, apply Adam with the configured schedule. Returns (params, loss
    curve).
    """
    if not examples:
        raise EmptyDataset("training requires at least one example")
    params = init_params(model_config, config.seed, dtype=dtype)
    names = params.keys()
    arrays = params.arrays()
    opt = Adam(arrays, beta1=config.beta1, beta2=config.beta2)
    rng = np.random.default_rng(config.seed + 1)
    losses: list[float] = []
    for step in range(config.steps):
        idxs = rng.integers(0, len(examples), size=config.batch)
        batch = [examples[i] for i in idxs]
        grads, loss = gradients(params, batch)
        grad_list = [grads[name] for name in names]
        clip_global_norm(grad_list, config.clip)
        if config.schedule == "cosine":
            lr = cosine_lr(step, config.steps, config.lr)
        else:
            lr = config.lr
        opt.step(arrays, grad_list, lr)
        losses.append(loss)
        if callback is not None:
            callback(step, loss)
    return params, losses


# --- checkpoint I/O -----------------------------------------------------------------

def save_checkpoint(path, params: ModelParams, budget: int, text_seed: int,
                    vocab_sha: str, codebook_sha: str) -> None:
    cfg = params.config
    header = MAGIC + struct.pack(
        "<IIIIIII", VERSION, cfg.n_layers, cfg.n_heads, cfg.d_model,
        cfg.d_text, cfg.k, cfg.seq_len)
    header += struct.pack("<qq", budget, text_seed)
    header += bytes.fromhex(vocab_sha) + bytes.fromhex(codebook_sha)
    with open(path, "wb") as fh:
        fh.write(header)
        for name in params.keys():
            fh.write(np.ascontiguousarray(params.values[name], dtype="<f4").tobytes())


def load_checkpoint(path):
    """Returns (params, budget, text_seed, vocab_sha, codebook_sha)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ShapeMismatch("not a checkpoint file (bad magic)")
    version, n_layers, n_heads, d_model, d_text, k, seq_len = struct.unpack_from("<IIIIIII", blob, 4)
    if version != VERSION:
        raise ShapeMismatch(f"unsupported checkpoint version {version}")
    offset = 4 + 28
    budget, text_seed = struct.unpack_from("<qq", blob, offset)
    offset += 16
    vocab_sha = blob[offset:offset + 32].hex()
    codebook_sha = blob[offset + 32:offset + 64].hex()
    offset += 64
    config = ModelConfig(n_layers=n_layers, n_heads=n_heads, d_model=d_model,
                         d_text=d_text, k=k, seq_len=seq_len)
    values = {}
    for name, shape in _param_shapes(config):
        count = int(np.prod(shape))
        values[name] = np.frombuffer(blob, dtype="<f4", count=count,
                                     offset=offset).reshape(shape).copy()
        offset += count * 4
    if offset != len(blob):
        raise ShapeMismatch("checkpoint size does not match architecture")
    return ModelParams(config, values), budget, text_seed, vocab_sha, codebook_sha


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
