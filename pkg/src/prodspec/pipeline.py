"""Glue between corpus files and the trainable models."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .cnn_coarse import CnnConfig, CnnModel, TrainConfig, TrainResult, train_cnn
from .dataset import BlockLabel, ManifestEntry, harvest_negative_blocks, load_document
from .dom import DEFAULT_BLACKLIST, TagBlacklist, decompose, resolve_path
from .errors import PathError
from .features import FilterFeatures, compute_filter_features
from .labels import Label
from .svm_filter import SvmConfig, SvmModel, calibrate_threshold, train_svm
from .token_embed import DEFAULT_LENGTH, EmbeddingConfig, EmbeddingTable, TokenSequence, tokenize_block, train_embeddings

log = logging.getLogger(__name__)


@dataclass
class BlockSample:
    page_id: str
    split: str
    path: tuple[int, ...]
    label: Label
    features: FilterFeatures
    tokens: TokenSequence


def page_samples(
    entry: ManifestEntry,
    page_labels: Sequence[BlockLabel],
    skip_top: int = 3,
    length: int = DEFAULT_LENGTH,
    blacklist: TagBlacklist = DEFAULT_BLACKLIST,
) -> list[BlockSample]:
    """Features and tokens for one page's labeled blocks.

    Spec blocks are measured on the intact page; they are then removed and
    non-spec blocks are measured on what remains. When the page carries no
    non-spec labels they are harvested.
    """
    doc = load_document(entry)
    spec = [lb for lb in page_labels if lb.label is Label.SPEC]
    neg = [lb for lb in page_labels if lb.label is Label.NON_SPEC]
    out = []
    spec_nodes = []
    for lb in spec:
        node = resolve_path(doc.root, lb.block_path)
        spec_nodes.append(node)
        out.append(BlockSample(entry.page_id, entry.split, lb.block_path, Label.SPEC, compute_filter_features(node, blacklist), tokenize_block(node, length, blacklist)))
    if not neg:
        neg = harvest_negative_blocks(doc, [lb.block_path for lb in spec], skip_top, blacklist)
    else:
        for n in spec_nodes:
            if n.parent is not None:
                decompose(n)
    for lb in neg:
        try:
            node = resolve_path(doc.root, lb.block_path)
        except PathError:
            # a labeled negative inside a removed spec block
            log.warning("page %s: non-spec path %s not reachable after spec removal", entry.page_id, lb.block_path)
            continue
        out.append(BlockSample(entry.page_id, entry.split, lb.block_path, Label.NON_SPEC, compute_filter_features(node, blacklist), tokenize_block(node, length, blacklist)))
    return out


def collect_samples(
    entries: Iterable[ManifestEntry],
    labels: Iterable[BlockLabel],
    splits: Optional[Sequence[str]] = None,
    skip_top: int = 3,
    length: int = DEFAULT_LENGTH,
    blacklist: TagBlacklist = DEFAULT_BLACKLIST,
) -> list[BlockSample]:
    by_page: dict[str, list[BlockLabel]] = defaultdict(list)
    for lb in labels:
        by_page[lb.page_id].append(lb)
    out = []
    for e in entries:
        if splits is not None and e.split not in splits:
            continue
        if e.page_id not in by_page:
            continue
        out.extend(page_samples(e, by_page[e.page_id], skip_top, length, blacklist))
    return out


def fit_filter(
    samples: Sequence[BlockSample],
    cfg: SvmConfig = SvmConfig(),
    calibration: Optional[Sequence[BlockSample]] = None,
    target_recall: float = 1.0,
) -> SvmModel:
    """Train the filter; if ``calibration`` is given, tune its threshold for recall on the SPEC-labelled blocks there."""
    model = train_svm([(s.features, s.label.sign) for s in samples], cfg)
    if calibration is not None:
        calibrate_threshold(model, [s.features for s in calibration if s.label is Label.SPEC], target_recall)
    return model


def fit_embeddings(samples: Sequence[BlockSample], cfg: EmbeddingConfig = EmbeddingConfig()) -> EmbeddingTable:
    return train_embeddings([s.tokens for s in samples], cfg)


def fit_coarse(
    samples: Sequence[BlockSample],
    table: EmbeddingTable,
    cfg: TrainConfig = TrainConfig(),
    validation: Optional[Sequence[BlockSample]] = None,
    length: int = DEFAULT_LENGTH,
) -> TrainResult:
    model_cfg = CnnConfig(input_len=length, embed_dim=table.dim)
    val = [(s.tokens, s.label) for s in validation] if validation else None
    return train_cnn([(s.tokens, s.label) for s in samples], table, cfg, model_cfg, val)


@dataclass
class Models:
    svm: Optional[SvmModel] = None
    cnn: Optional[CnnModel] = None
    table: Optional[EmbeddingTable] = None
