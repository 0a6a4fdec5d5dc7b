"""Block tokenizer and word-embedding table for the coarse CNN.

Tokens are tag markers such as ``<div>`` / ``</div>`` plus lowercase words
from text nodes. Attributes (class, id, style, href, ...) never reach the
token stream. Digits and punctuation are removed from words, except for
the characters ``<``, ``>`` and ``/``.
"""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dom import DEFAULT_BLACKLIST, VOID_ELEMENTS, DomNode, NodeKind, TagBlacklist
from .errors import EmptyCorpus, FormatError

PAD = "<pad>"
UNK = "<unk>"
DEFAULT_LENGTH = 40
KEPT_PUNCT = frozenset("<>/")

EMB_FORMAT = "prodspec-embeddings"
EMB_VERSION = 1


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    pad_token: str = PAD

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def real_length(self) -> int:
        n = len(self.tokens)
        while n and self.tokens[n - 1] == self.pad_token:
            n -= 1
        return n


def _keep_char(ch: str) -> bool:
    if ch in KEPT_PUNCT:
        return True
    cat = unicodedata.category(ch)
    # N* digits/numbers, P* punctuation, S* symbols, Z*/C* separators and controls
    return cat[0] in "LM"


def clean_word(word: str) -> str:
    return "".join(ch for ch in word.lower() if _keep_char(ch))


def word_tokens(text: str) -> list[str]:
    out = []
    for w in text.split():
        c = clean_word(w)
        if c:
            out.append(c)
    return out


def tokenize_block(block: DomNode, length: int = DEFAULT_LENGTH, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> TokenSequence:
    """Tokenize ``block`` into exactly ``length`` tokens (truncate or pad).

    Blacklisted subtrees contribute nothing, tags included.
    """
    tokens: list[str] = []
    stack: list = [block]
    while stack and len(tokens) < length:
        item = stack.pop()
        if isinstance(item, str):
            tokens.append(item)
            continue
        if item.kind is NodeKind.TEXT:
            tokens.extend(word_tokens(item.text))
            continue
        if item.tag in blacklist:
            continue
        tokens.append(f"<{item.tag}>")
        if item.tag in VOID_ELEMENTS:
            continue
        stack.append(f"</{item.tag}>")
        stack.extend(reversed(item.children))
    tokens = tokens[:length]
    tokens.extend([PAD] * (length - len(tokens)))
    return TokenSequence(tuple(tokens))


class EmbeddingTable:
    """Token vocabulary plus a ``|vocab| x dim`` matrix; row 0 is padding, row 1 unknown."""

    pad_index = 0
    unk_index = 1

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray):
        tokens = list(tokens)
        vectors = np.asarray(vectors, dtype=np.float64)
        if len(tokens) < 2 or tokens[0] != PAD or tokens[1] != UNK:
            raise ValueError("vocabulary must start with the pad and unk tokens")
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError(f"vectors shape {vectors.shape} does not match vocabulary size {len(tokens)}")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self.tokens = tokens
        self.vocab = {t: i for i, t in enumerate(tokens)}
        self.vectors = vectors
        self.vectors[self.pad_index] = 0.0
        self._digest: str | None = None

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def index(self, token: str) -> int:
        return self.vocab.get(token, self.unk_index)

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.index(token)]

    def digest(self) -> str:
        # tables are treated as immutable once built, so the digest is cached
        if self._digest is not None:
            return self._digest
        h = hashlib.sha256()
        h.update("\n".join(self.tokens).encode("utf-8"))
        h.update(np.ascontiguousarray(self.vectors, dtype="<f8").tobytes())
        self._digest = h.hexdigest()
        return self._digest


def embed_sequence(table: EmbeddingTable, seq: TokenSequence | Sequence[str]) -> np.ndarray:
    tokens = seq.tokens if isinstance(seq, TokenSequence) else seq
    idx = np.fromiter((table.index(t) for t in tokens), dtype=np.int64, count=len(tokens))
    return table.vectors[idx]


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    seed: int = 0
    min_count: int = 1
    lr: float = 0.025
    batch_size: int = 128


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def train_embeddings(corpus: Iterable[TokenSequence | Sequence[str]], cfg: EmbeddingConfig = EmbeddingConfig()) -> EmbeddingTable:
    """Skip-gram with negative sampling, vectorised over minibatches of pairs."""
    sentences = []
    for seq in corpus:
        toks = seq.tokens if isinstance(seq, TokenSequence) else tuple(seq)
        toks = [t for t in toks if t != PAD]
        if toks:
            sentences.append(toks)
    if not sentences:
        raise EmptyCorpus("embedding corpus has no tokens")

    counts: dict[str, int] = {}
    for s in sentences:
        for t in s:
            counts[t] = counts.get(t, 0) + 1
    kept = sorted((t for t, c in counts.items() if c >= cfg.min_count and t not in (PAD, UNK)), key=lambda t: (-counts[t], t))
    tokens = [PAD, UNK] + kept
    vocab = {t: i for i, t in enumerate(tokens)}
    V, D = len(tokens), cfg.dim

    freq = np.zeros(V)
    for t, c in counts.items():
        freq[vocab.get(t, 1)] += c
    noise = freq ** 0.75
    noise /= noise.sum()
    noise_cdf = np.cumsum(noise)

    rng = np.random.default_rng(cfg.seed)
    w_in = (rng.random((V, D)) - 0.5) / D
    w_out = np.zeros((V, D))
    encoded = [np.array([vocab.get(t, 1) for t in s], dtype=np.int64) for s in sentences]

    def epoch_pairs() -> tuple[np.ndarray, np.ndarray]:
        centers, contexts = [], []
        for s in encoded:
            n = len(s)
            if n < 2:
                continue
            spans = rng.integers(1, cfg.window + 1, size=n)
            for i in range(n):
                lo, hi = max(0, i - spans[i]), min(n, i + spans[i] + 1)
                ctx = np.concatenate([s[lo:i], s[i + 1:hi]])
                centers.append(np.full(len(ctx), s[i]))
                contexts.append(ctx)
        if not centers:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        c, o = np.concatenate(centers), np.concatenate(contexts)
        order = rng.permutation(len(c))
        return c[order], o[order]

    # rough step count for linear learning-rate decay
    total_pairs = sum(max(0, len(s) - 1) for s in encoded) * (cfg.window + 1) * cfg.epochs
    seen = 0
    for _ in range(cfg.epochs):
        centers, contexts = epoch_pairs()
        for start in range(0, len(centers), cfg.batch_size):
            c = centers[start:start + cfg.batch_size]
            o = contexts[start:start + cfg.batch_size]
            b = len(c)
            lr = cfg.lr * max(1e-4, 1.0 - seen / max(1, total_pairs))
            seen += b
            neg = np.searchsorted(noise_cdf, rng.random((b, cfg.negatives)))
            neg = np.minimum(neg, V - 1)
            targets = np.concatenate([o[:, None], neg], axis=1)  # (b, 1+k)
            labels = np.zeros((b, 1 + cfg.negatives))
            labels[:, 0] = 1.0
            v = w_in[c]  # (b, D)
            u = w_out[targets]  # (b, 1+k, D)
            score = np.einsum("bd,bkd->bk", v, u)
            g = (_sigmoid(score) - labels) * lr  # (b, 1+k)
            grad_v = np.einsum("bk,bkd->bd", g, u)
            grad_u = g[:, :, None] * v[:, None, :]
            np.add.at(w_out, targets.ravel(), -grad_u.reshape(-1, D))
            np.add.at(w_in, c, -grad_v)

    if counts.get(UNK, 0) == 0 and not any(c < cfg.min_count for c in counts.values()):
        # unk never occurred in training; give it the centroid of the real vocabulary
        w_in[1] = w_in[2:].mean(axis=0) if V > 2 else 0.0
    return EmbeddingTable(tokens, w_in)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Text format: a header line ``prodspec-embeddings <version> <V> <D>``,
    then one line per token: the token followed by its D floats."""
    lines = [f"{EMB_FORMAT} {EMB_VERSION} {len(table)} {table.dim}"]
    for tok, row in zip(table.tokens, table.vectors):
        lines.append(tok + " " + " ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embeddings(path: str | Path) -> EmbeddingTable:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty embedding file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != EMB_FORMAT:
        raise FormatError(f"{path}: bad embedding header {lines[0][:60]!r}")
    try:
        version, n, dim = int(header[1]), int(header[2]), int(header[3])
    except ValueError as exc:
        raise FormatError(f"{path}: bad embedding header ({exc})") from exc
    if version != EMB_VERSION:
        raise FormatError(f"{path}: unsupported embedding version {version}")
    body = lines[1:]
    if len(body) != n:
        raise FormatError(f"{path}: expected {n} rows, found {len(body)}")
    tokens, rows = [], []
    for lineno, line in enumerate(body, start=2):
        parts = line.split(" ")
        if len(parts) != dim + 1:
            raise FormatError(f"{path}:{lineno}: expected {dim} values")
        tokens.append(parts[0])
        try:
            rows.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    try:
        return EmbeddingTable(tokens, np.array(rows, dtype=np.float64).reshape(n, dim))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
