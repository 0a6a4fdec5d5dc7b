"""Token CNN used as the second ("coarse") stage of block classification.

Architecture, applied to an ``L x D`` matrix of token embeddings::

    dropout -> [conv(width k, F filters, same padding) -> ReLU] x 4
            -> max over time -> dropout -> linear -> 2 logits

Forward and backward passes are written out in numpy (float64) so the
gradients can be checked against finite differences. Training uses Adam
on mean softmax cross-entropy plus ``l2 * sum(theta**2)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dom import DomNode
from .errors import DegenerateData, EmbeddingMismatch, FormatError, ShapeError, StaleCache
from .labels import Label
from .token_embed import EmbeddingTable, TokenSequence, embed_sequence, tokenize_block

CKPT_FORMAT = "prodspec-cnn"
CKPT_VERSION = 1


@dataclass(frozen=True)
class CnnConfig:
    input_len: int = 40
    embed_dim: int = 100
    filters: int = 24
    width: int = 4
    n_layers: int = 4
    dropout: float = 0.4
    n_classes: int = 2


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 2
    lr: float = 1e-5
    l2: float = 1e-6
    epochs: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size <= 0 or self.lr <= 0 or self.l2 < 0 or self.epochs < 0:
            raise ValueError(f"invalid training config: {self}")


@dataclass
class _Cache:
    x: np.ndarray
    in_mask: Optional[np.ndarray]
    cols: list[np.ndarray]
    pre: list[np.ndarray]
    pool_idx: np.ndarray
    pooled: np.ndarray
    fc_mask: Optional[np.ndarray]
    fc_in: np.ndarray
    logits: np.ndarray


@dataclass
class CnnModel:
    config: CnnConfig
    params: dict[str, np.ndarray]
    embedding_digest: str = ""
    cache: Optional[_Cache] = field(default=None, repr=False, compare=False)

    @classmethod
    def init(cls, config: CnnConfig = CnnConfig(), seed: int = 0, embedding_digest: str = "") -> "CnnModel":
        """He-style uniform fan-in initialisation; all biases start at zero."""
        rng = np.random.default_rng(seed)
        params: dict[str, np.ndarray] = {}
        c_in = config.embed_dim
        for i in range(1, config.n_layers + 1):
            fan_in = config.width * c_in
            limit = np.sqrt(6.0 / fan_in)
            params[f"conv{i}_w"] = rng.uniform(-limit, limit, size=(fan_in, config.filters))
            params[f"conv{i}_b"] = np.zeros(config.filters)
            c_in = config.filters
        limit = np.sqrt(6.0 / config.filters)
        params["fc_w"] = rng.uniform(-limit, limit, size=(config.filters, config.n_classes))
        params["fc_b"] = np.zeros(config.n_classes)
        return cls(config=config, params=params, embedding_digest=embedding_digest)

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "CnnModel":
        return CnnModel(self.config, {k: v.copy() for k, v in self.params.items()}, self.embedding_digest)


def _pads(width: int) -> tuple[int, int]:
    left = (width - 1) // 2
    return left, width - 1 - left


def _im2col(h: np.ndarray, width: int) -> np.ndarray:
    b, length, c = h.shape
    left, right = _pads(width)
    hp = np.pad(h, ((0, 0), (left, right), (0, 0)))
    return np.concatenate([hp[:, j:j + length, :] for j in range(width)], axis=2)


def _col2im(dcols: np.ndarray, width: int, channels: int) -> np.ndarray:
    b, length, _ = dcols.shape
    left, right = _pads(width)
    dhp = np.zeros((b, length + left + right, channels))
    for j in range(width):
        dhp[:, j:j + length, :] += dcols[:, :, j * channels:(j + 1) * channels]
    return dhp[:, left:left + length, :]


def _dropout_mask(shape, p: float, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(shape) >= p) / (1.0 - p)


def forward(
    model: CnnModel,
    x: np.ndarray,
    train_mode: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Logits for one ``(L, D)`` input or a ``(B, L, D)`` batch.

    In train mode dropout is applied (inverted scaling) and the activations
    needed by :func:`backward` are cached on the model.
    """
    cfg = model.config
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    xb = x[None] if single else x
    if xb.ndim != 3 or xb.shape[1:] != (cfg.input_len, cfg.embed_dim):
        raise ShapeError(f"expected input of shape ({cfg.input_len}, {cfg.embed_dim}), got {x.shape}")
    use_dropout = train_mode and cfg.dropout > 0
    if use_dropout and rng is None:
        rng = np.random.default_rng(0)

    in_mask = _dropout_mask(xb.shape, cfg.dropout, rng) if use_dropout else None
    h = xb * in_mask if in_mask is not None else xb
    cols, pre = [], []
    for i in range(1, cfg.n_layers + 1):
        c = _im2col(h, cfg.width)
        z = c @ model.params[f"conv{i}_w"] + model.params[f"conv{i}_b"]
        cols.append(c)
        pre.append(z)
        h = np.maximum(z, 0.0)
    pool_idx = h.argmax(axis=1)  # (B, F)
    pooled = np.take_along_axis(h, pool_idx[:, None, :], axis=1)[:, 0, :]
    fc_mask = _dropout_mask(pooled.shape, cfg.dropout, rng) if use_dropout else None
    fc_in = pooled * fc_mask if fc_mask is not None else pooled
    logits = fc_in @ model.params["fc_w"] + model.params["fc_b"]

    if train_mode:
        model.cache = _Cache(xb, in_mask, cols, pre, pool_idx, pooled, fc_mask, fc_in, logits)
    return logits[0] if single else logits


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    logits = np.atleast_2d(logits)
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(labels)), labels].mean())


def l2_penalty(model: CnnModel, l2: float) -> float:
    return l2 * sum(float(np.sum(p * p)) for p in model.params.values())


def backward(model: CnnModel, batch: np.ndarray, labels: Sequence[int], l2: float = 0.0) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact gradients for the batch of the preceding train-mode forward."""
    cache = model.cache
    if cache is None:
        raise StaleCache("backward() needs a train-mode forward() first")
    batch = np.asarray(batch, dtype=np.float64)
    xb = batch[None] if batch.ndim == 2 else batch
    if xb.shape != cache.x.shape or not np.array_equal(xb, cache.x):
        raise StaleCache("cached activations belong to a different batch")
    model.cache = None

    cfg = model.config
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    b = len(y)
    probs = _softmax(cache.logits)
    loss = loss_from_logits(cache.logits, y) + l2_penalty(model, l2)

    grads: dict[str, np.ndarray] = {}
    dlogits = probs.copy()
    dlogits[np.arange(b), y] -= 1.0
    dlogits /= b
    grads["fc_w"] = cache.fc_in.T @ dlogits
    grads["fc_b"] = dlogits.sum(axis=0)
    dpooled = dlogits @ model.params["fc_w"].T
    if cache.fc_mask is not None:
        dpooled = dpooled * cache.fc_mask

    dh = np.zeros_like(cache.pre[-1])
    bi, fi = np.meshgrid(np.arange(b), np.arange(cfg.filters), indexing="ij")
    dh[bi, cache.pool_idx, fi] = dpooled
    for i in range(cfg.n_layers, 0, -1):
        dz = dh * (cache.pre[i - 1] > 0)
        c = cache.cols[i - 1]
        grads[f"conv{i}_w"] = c.reshape(-1, c.shape[2]).T @ dz.reshape(-1, dz.shape[2])
        grads[f"conv{i}_b"] = dz.sum(axis=(0, 1))
        if i > 1:
            dcols = dz @ model.params[f"conv{i}_w"].T
            dh = _col2im(dcols, cfg.width, cfg.filters)

    if l2:
        for k, p in model.params.items():
            grads[k] = grads[k] + 2.0 * l2 * p
    return loss, grads


def evaluate_loss(model: CnnModel, x: np.ndarray, labels: Sequence[int], l2: float = 0.0) -> float:
    logits = forward(model, x, train_mode=False)
    return loss_from_logits(logits, np.asarray(labels)) + l2_penalty(model, l2)


def _as_class(label) -> int:
    if isinstance(label, Label):
        return 1 if label is Label.SPEC else 0
    v = int(label)
    if v not in (0, 1):
        raise ValueError(f"class labels must be 0/1 or Label, got {label!r}")
    return v


@dataclass
class TrainResult:
    model: CnnModel
    train_losses: list[float]
    val_losses: list[float]
    best_epoch: int


def train_cnn(
    data: Sequence[tuple[TokenSequence | np.ndarray, object]],
    table: Optional[EmbeddingTable],
    cfg: TrainConfig = TrainConfig(),
    model_config: Optional[CnnConfig] = None,
    validation: Optional[Sequence[tuple[TokenSequence | np.ndarray, object]]] = None,
) -> TrainResult:
    """Adam over seeded, shuffled minibatches.

    ``data`` items are ``(tokens_or_matrix, label)``; token sequences are
    embedded with ``table``. With a validation split the parameters with the
    lowest validation loss are returned, otherwise the last epoch's.
    """

    def encode(items):
        xs, ys = [], []
        for seq, lbl in items:
            xs.append(embed_sequence(table, seq) if isinstance(seq, TokenSequence) else np.asarray(seq, dtype=np.float64))
            ys.append(_as_class(lbl))
        return np.stack(xs), np.array(ys, dtype=np.int64)

    if not data:
        raise DegenerateData("no training data")
    x, y = encode(data)
    if len(np.unique(y)) < 2:
        raise DegenerateData("coarse model training needs both classes")
    if model_config is None:
        model_config = CnnConfig(input_len=x.shape[1], embed_dim=x.shape[2])
    digest = table.digest() if table is not None else ""
    model = CnnModel.init(model_config, seed=cfg.seed, embedding_digest=digest)
    xv = yv = None
    if validation:
        xv, yv = encode(validation)

    rng = np.random.default_rng(cfg.seed)
    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v2 = {k: np.zeros_like(v) for k, v in model.params.items()}
    step = 0
    train_losses, val_losses = [], []
    best = (np.inf, -1, None)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = x[idx]
            forward(model, xb, train_mode=True, rng=rng)
            loss, grads = backward(model, xb, y[idx], cfg.l2)
            total += loss * len(idx)
            step += 1
            c1 = 1.0 - cfg.beta1 ** step
            c2 = 1.0 - cfg.beta2 ** step
            for k, g in grads.items():
                m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * g
                v2[k] = cfg.beta2 * v2[k] + (1 - cfg.beta2) * g * g
                model.params[k] -= cfg.lr * (m[k] / c1) / (np.sqrt(v2[k] / c2) + cfg.eps)
        train_losses.append(total / len(y))
        if xv is not None:
            vl = evaluate_loss(model, xv, yv, cfg.l2)
            val_losses.append(vl)
            if vl < best[0]:
                best = (vl, epoch, model.copy())
    if best[2] is not None:
        return TrainResult(best[2], train_losses, val_losses, best[1])
    return TrainResult(model, train_losses, val_losses, cfg.epochs - 1)


def predict_coarse(model: CnnModel, table: EmbeddingTable, block: DomNode) -> tuple[Label, float]:
    """Label and spec-class probability for a DOM block."""
    if model.embedding_digest and model.embedding_digest != table.digest():
        raise EmbeddingMismatch("coarse model was trained with a different embedding table")
    seq = tokenize_block(block, model.config.input_len)
    logits = forward(model, embed_sequence(table, seq))
    p_spec = float(_softmax(logits)[1])
    return (Label.SPEC if logits[1] > logits[0] else Label.NON_SPEC), p_spec


def save_cnn(model: CnnModel, path: str | Path) -> None:
    meta = {
        "format": CKPT_FORMAT,
        "version": CKPT_VERSION,
        "config": asdict(model.config),
        "embedding_digest": model.embedding_digest,
        "param_names": sorted(model.params),
    }
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **model.params)


def load_cnn(path: str | Path) -> CnnModel:
    try:
        with np.load(path, allow_pickle=False) as npz:
            meta = json.loads(str(npz["__meta__"]))
            if meta.get("format") != CKPT_FORMAT:
                raise FormatError(f"{path}: not a {CKPT_FORMAT} checkpoint")
            if meta.get("version") != CKPT_VERSION:
                raise FormatError(f"{path}: unsupported checkpoint version {meta.get('version')!r}")
            params = {name: npz[name].astype(np.float64) for name in meta["param_names"]}
    except FormatError:
        raise
    except Exception as exc:  # zipfile / npy / json errors on damaged files
        raise FormatError(f"{path}: unreadable checkpoint ({exc})") from exc
    config = CnnConfig(**meta["config"])
    model = CnnModel(config, params, meta.get("embedding_digest", ""))
    expected = CnnModel.init(config).params
    for k, v in expected.items():
        if k not in params or params[k].shape != v.shape:
            raise FormatError(f"{path}: parameter {k} missing or mis-shaped")
    return model
