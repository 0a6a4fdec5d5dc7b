"""Recursive cascade traversal that collects candidate specification blocks.

Starting at ``<body>``, every non-blacklisted element that holds text and has
more than one element child is shown to the filter stage and, if accepted,
to the coarse stage. A block accepted by both is recorded and detached from
the tree, so nothing beneath it is classified again. Every other element is
descended into.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

from .cnn_coarse import CnnModel, predict_coarse
from .dom import DEFAULT_BLACKLIST, DomNode, NodeKind, TagBlacklist, decompose, has_text, node_path
from .errors import EmbeddingMismatch
from .features import compute_filter_features
from .labels import Label
from .svm_filter import SvmModel, predict_svm
from .token_embed import EmbeddingTable

# A stage maps a block to (accepted, score).
Stage = Callable[[DomNode], "tuple[bool, float]"]


class Arrangement(str, enum.Enum):
    FILTER_ONLY = "filter"
    COARSE_ONLY = "coarse"
    FILTER_PLUS_COARSE = "filter+coarse"


@dataclass
class Candidate:
    node: DomNode
    node_id: int
    path: tuple[int, ...]
    filter_margin: float
    coarse_score: float

    @property
    def tag(self) -> str:
        return self.node.tag


def filter_stage(model: SvmModel, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> Stage:
    def run(node: DomNode) -> tuple[bool, float]:
        label, margin = predict_svm(model, compute_filter_features(node, blacklist))
        return label is Label.SPEC, margin

    return run


def coarse_stage(model: CnnModel, table: EmbeddingTable) -> Stage:
    if model.embedding_digest and model.embedding_digest != table.digest():
        raise EmbeddingMismatch("coarse model was trained with a different embedding table")

    def run(node: DomNode) -> tuple[bool, float]:
        label, score = predict_coarse(model, table, node)
        return label is Label.SPEC, score

    return run


def always_accept(node: DomNode) -> tuple[bool, float]:
    return True, float("nan")


def spec_traverse(
    node: DomNode,
    filter_fn: Optional[Stage],
    coarse_fn: Optional[Stage],
    blacklist: TagBlacklist = DEFAULT_BLACKLIST,
    count_elements_only: bool = True,
    visit_log: Optional[list[int]] = None,
) -> list[Candidate]:
    """Run the cascade over the subtree at ``node``.

    A stage given as ``None`` is bypassed (always accepts). Accepted blocks
    are decomposed, which mutates the document. Paths in the returned
    candidates are element-index paths from the document root, taken before
    the block is detached.
    """
    filter_fn = filter_fn or always_accept
    coarse_fn = coarse_fn or always_accept
    candidates: list[Candidate] = []
    stack = [node]
    while stack:
        n = stack.pop()
        # a sibling accepted earlier never detaches n itself, but a caller-supplied
        # stage might mutate the tree; skip anything no longer attached
        if n is not node and n.parent is None:
            continue
        if visit_log is not None:
            visit_log.append(n.node_id)
        if n.tag in blacklist or not has_text(n, blacklist):
            continue
        n_children = len(n.element_children()) if count_elements_only else len(n.children)
        if n_children > 1:
            ok, margin = filter_fn(n)
            if ok:
                ok, score = coarse_fn(n)
                if ok:
                    candidates.append(Candidate(n, n.node_id, node_path(n), margin, score))
                    if n.parent is not None:
                        decompose(n)
                    continue
        stack.extend(reversed([c for c in n.children if c.kind is NodeKind.ELEMENT]))
    return candidates


def classify_document(
    root: DomNode,
    arrangement: Arrangement,
    filter_fn: Optional[Stage],
    coarse_fn: Optional[Stage],
    blacklist: TagBlacklist = DEFAULT_BLACKLIST,
) -> list[Candidate]:
    """Apply one of the three cascade arrangements; the bypassed stage always accepts."""
    arrangement = Arrangement(arrangement)
    if arrangement is Arrangement.FILTER_ONLY:
        return spec_traverse(root, filter_fn, None, blacklist)
    if arrangement is Arrangement.COARSE_ONLY:
        return spec_traverse(root, None, coarse_fn, blacklist)
    return spec_traverse(root, filter_fn, coarse_fn, blacklist)


def run_filter_only(root: DomNode, filter_fn: Stage, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> list[Candidate]:
    return spec_traverse(root, filter_fn, None, blacklist)


def run_coarse_only(root: DomNode, coarse_fn: Stage, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> list[Candidate]:
    return spec_traverse(root, None, coarse_fn, blacklist)
