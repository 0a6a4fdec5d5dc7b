"""Attribute-value extraction from candidate specification blocks.

Text cells that exactly match a known attribute name (the seed pool) vote
for their wrapper, which is the tag signature of the cell. The wrapper with
the most distinct matched attributes wins. From each of its cells the
enclosing row is found bottom-up, and the row plus all of its sibling rows
are read pairwise. With feedback enabled, the extracted attribute names are
added to the pool after every page.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .dom import (
    DEFAULT_BLACKLIST,
    DomNode,
    NodeKind,
    TagBlacklist,
    Wrapper,
    iter_tree,
    normalize_space,
    text_descendants,
    wrapper_of,
)
from .errors import NoMatch, RowNotFound

log = logging.getLogger(__name__)

Pair = tuple[str, str]


class ColumnMode(str, enum.Enum):
    TWO_COL = "two-col"
    FOUR_COL = "four-col"


def normalize_attribute(name: str) -> str:
    return normalize_space(name).lower()


class SeedPool:
    """Known attribute names, stored normalised. The pool only ever grows."""

    def __init__(self, names: Iterable[str] = ()):
        self.attributes: set[str] = set()
        for n in names:
            self.add(n)
        self.initial_size = len(self.attributes)

    @classmethod
    def load(cls, path: str | Path) -> "SeedPool":
        return cls(_read_seed_lines(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "SeedPool":
        text = resources.files("prodspec.data").joinpath("seeds.txt").read_text(encoding="utf-8")
        return cls(_read_seed_lines(text))

    def add(self, name: str) -> bool:
        key = normalize_attribute(name)
        if not key or key in self.attributes:
            return False
        self.attributes.add(key)
        return True

    def update(self, names: Iterable[str]) -> int:
        return sum(self.add(n) for n in names)

    def copy(self) -> "SeedPool":
        other = SeedPool()
        other.attributes = set(self.attributes)
        other.initial_size = self.initial_size
        return other

    def __contains__(self, text: str) -> bool:
        return normalize_attribute(text) in self.attributes

    def __len__(self) -> int:
        return len(self.attributes)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(f"{a}\n" for a in sorted(self.attributes)), encoding="utf-8")


def _read_seed_lines(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


@dataclass(frozen=True)
class AttrValuePair:
    attribute: str
    value: str
    page_id: str = ""
    block_node_id: int = -1
    block_path: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.attribute or not self.value:
            raise ValueError("attribute and value must be non-empty")

    @property
    def pair(self) -> Pair:
        return (self.attribute, self.value)


def is_excluded_text(text: str) -> bool:
    """Cells holding only punctuation, symbols or whitespace (':' or '|' separators)."""
    return not any(ch.isalnum() for ch in text)


def clean_fields(node: DomNode, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> list[DomNode]:
    """Text fields of ``node`` minus the exclusion set."""
    return [t for t in text_descendants(node, blacklist) if not is_excluded_text(t.norm_text)]


def exclusion_set(block: DomNode, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> set[int]:
    kept = {t.node_id for t in clean_fields(block, blacklist)}
    return {n.node_id for n in iter_tree(block) if n.kind is NodeKind.TEXT and n.node_id not in kept}


@dataclass
class MatchResult:
    wrapper: Wrapper
    support_attrs: list[DomNode]
    support: int
    # every wrapper's support, kept for diagnostics and tests
    all_support: dict[Wrapper, int] = field(default_factory=dict, repr=False)


def bottom_up(cell: DomNode, block: Optional[DomNode] = None, blacklist: TagBlacklist = DEFAULT_BLACKLIST, min_fields: int = 2) -> DomNode:
    """Nearest proper ancestor of ``cell`` holding at least ``min_fields`` clean text fields.

    The search stops at ``block`` (inclusive); RowNotFound if nothing qualifies.
    """
    n = cell.parent
    while n is not None:
        if len(clean_fields(n, blacklist)) >= min_fields:
            return n
        if n is block:
            break
        n = n.parent
    raise RowNotFound(f"no ancestor of {cell!r} holds {min_fields} text fields")


def match_tag(block: DomNode, seeds: SeedPool, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> MatchResult:
    """Pick the wrapper with the largest number of distinct seed attributes in ``block``."""
    groups: dict[Wrapper, list[DomNode]] = {}
    names: dict[Wrapper, set[str]] = {}
    for t in clean_fields(block, blacklist):
        key = normalize_attribute(t.norm_text)
        if key in seeds.attributes:
            w = wrapper_of(t, block)
            groups.setdefault(w, []).append(t)
            names.setdefault(w, set()).add(key)
    if not groups:
        raise NoMatch("no seed attribute occurs in the block")

    def n_rows(w: Wrapper) -> int:
        rows = set()
        for t in groups[w]:
            try:
                rows.add(bottom_up(t, block, blacklist).node_id)
            except RowNotFound:
                rows.add(t.parent.node_id)
        return len(rows)

    support = {w: len(v) for w, v in names.items()}
    top = max(support.values())
    tied = [w for w, s in support.items() if s == top]
    if len(tied) > 1:
        row_counts = {w: n_rows(w) for w in tied}
        best_rows = max(row_counts.values())
        tied = [w for w in tied if row_counts[w] == best_rows]
    best = min(tied, key=lambda w: w.signature)
    return MatchResult(best, groups[best], top, support)


def extract_row_wise(row: DomNode, mode: ColumnMode = ColumnMode.TWO_COL, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> list[Pair]:
    """Read a row's clean text fields as attribute/value pairs.

    two-col alternates attribute, value, attribute, ... (a dangling last
    field is dropped). four-col reads complete groups of four as
    (attr1, val1, attr2, val2); an incomplete trailing group is dropped.
    Rows with fewer than two fields yield nothing.
    """
    texts = [t.norm_text for t in clean_fields(row, blacklist)]
    if len(texts) <= 1:
        return []
    mode = ColumnMode(mode)
    if mode is ColumnMode.TWO_COL:
        return [(texts[i], texts[i + 1]) for i in range(0, len(texts) - 1, 2)]
    out = []
    for i in range(0, len(texts) - 3, 4):
        a1, v1, a2, v2 = texts[i:i + 4]
        out.extend([(a1, v1), (a2, v2)])
    return out


def _dedup(pairs: Iterable[Pair]) -> list[Pair]:
    seen = set()
    out = []
    for p in pairs:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def _row_and_siblings(block: DomNode, row: DomNode) -> list[DomNode]:
    if row is block or row.parent is None:
        return [row]
    return [c for c in row.parent.children if c.kind is NodeKind.ELEMENT]


def traverse_granular(
    block: DomNode,
    wrapper: Wrapper,
    matched_cell: DomNode,
    mode: ColumnMode = ColumnMode.TWO_COL,
    blacklist: TagBlacklist = DEFAULT_BLACKLIST,
) -> list[Pair]:
    """Pairs from the row holding ``matched_cell`` and from all its sibling rows."""
    try:
        row = bottom_up(matched_cell, block, blacklist)
    except RowNotFound:
        log.debug("no row above %r in block %r", matched_cell, block)
        return []
    out: list[Pair] = []
    for r in _row_and_siblings(block, row):
        out.extend(extract_row_wise(r, mode, blacklist))
    return out


def traverse_block(
    block: DomNode,
    wrapper: Optional[Wrapper],
    support_attrs: Sequence[DomNode],
    mode: ColumnMode = ColumnMode.TWO_COL,
    blacklist: TagBlacklist = DEFAULT_BLACKLIST,
) -> list[Pair]:
    """Top-down pass: extract around every support cell carrying ``wrapper``.

    Cells whose row group was already read are skipped, so a block of
    sibling rows is read once however many seeds it contains.
    """
    if wrapper is None or not support_attrs:
        return []
    wanted = {t.node_id for t in support_attrs}
    done_groups: set[int] = set()
    out: list[Pair] = []
    for t in text_descendants(block, blacklist):
        if t.node_id not in wanted or wrapper_of(t, block) != wrapper:
            continue
        try:
            row = bottom_up(t, block, blacklist)
        except RowNotFound:
            continue
        group_key = row.node_id if row is block or row.parent is None else row.parent.node_id
        if group_key in done_groups:
            continue
        done_groups.add(group_key)
        out.extend(traverse_granular(block, wrapper, t, mode, blacklist))
    return _dedup(out)


def extract_block(block: DomNode, seeds: SeedPool, mode: ColumnMode = ColumnMode.TWO_COL, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> list[Pair]:
    try:
        match = match_tag(block, seeds, blacklist)
    except NoMatch:
        return []
    return traverse_block(block, match.wrapper, match.support_attrs, mode, blacklist)


def extract_specifications(
    candidates: Sequence,
    seeds: SeedPool,
    mode: ColumnMode = ColumnMode.TWO_COL,
    feedback: bool = False,
    page_id: str = "",
    blacklist: TagBlacklist = DEFAULT_BLACKLIST,
) -> list[AttrValuePair]:
    """Extract pairs from one page's candidate blocks.

    ``candidates`` are :class:`~prodspec.classify.Candidate` objects or bare
    DOM nodes. With ``feedback`` the extracted attribute names join ``seeds``
    once the whole page is done, never mid-page.
    """
    out: list[AttrValuePair] = []
    for cand in candidates:
        node = getattr(cand, "node", cand)
        path = tuple(getattr(cand, "path", ()))
        try:
            pairs = extract_block(node, seeds, mode, blacklist)
        except Exception:  # one bad block must not sink the page
            log.exception("extraction failed on block %r of page %s", node, page_id)
            continue
        out.extend(AttrValuePair(a, v, page_id, node.node_id, path) for a, v in pairs)
    if feedback:
        seeds.update(p.attribute for p in out)
    return out
