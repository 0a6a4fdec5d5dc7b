"""A small mutable DOM built on top of html5lib's tree construction.

html5lib does the HTML5 error recovery; the result is copied into
:class:`DomNode` objects which carry the parent links, stable ids and
element indices that the classification and extraction passes rely on.
"""

from __future__ import annotations

import enum
import html
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import html5lib

from .errors import EmptyInput, EncodingError, PathError, RootDecompose

VOID_ELEMENTS = frozenset(
    {
        "area", "base", "br", "col", "embed", "hr", "img", "input", "keygen",
        "link", "meta", "param", "source", "track", "wbr",
    }
)
RAW_TEXT_ELEMENTS = frozenset({"script", "style", "xmp", "iframe", "noembed", "noframes", "noscript"})


class NodeKind(enum.Enum):
    ELEMENT = "element"
    TEXT = "text"


def normalize_space(text: str) -> str:
    return " ".join(text.split())


class TagBlacklist:
    """Lowercase tag names whose subtrees never hold specification text."""

    __slots__ = ("tags",)

    def __init__(self, tags: Iterable[str]):
        tags = frozenset(tags)
        if not tags:
            raise ValueError("blacklist must not be empty")
        bad = [t for t in tags if t != t.lower()]
        if bad:
            raise ValueError(f"blacklist entries must be lowercase: {sorted(bad)}")
        self.tags = tags

    def __contains__(self, tag: object) -> bool:
        return tag in self.tags

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.tags))

    def __len__(self) -> int:
        return len(self.tags)

    def __repr__(self) -> str:
        return f"TagBlacklist({sorted(self.tags)!r})"


DEFAULT_BLACKLIST = TagBlacklist(
    {
        "script", "style", "noscript", "head", "meta", "link", "iframe", "svg",
        "nav", "footer", "header", "form", "button", "input", "select", "option",
    }
)


class DomNode:
    __slots__ = ("kind", "tag", "text", "attrs", "children", "parent", "node_id", "index", "_norm")

    def __init__(
        self,
        kind: NodeKind,
        tag: str = "",
        text: str = "",
        attrs: Optional[dict[str, str]] = None,
        node_id: int = -1,
    ):
        self.kind = kind
        self.tag = tag
        self.text = text
        self.attrs = attrs if attrs is not None else {}
        self.children: list[DomNode] = []
        self.parent: Optional[DomNode] = None
        self.node_id = node_id
        # position among the parent's element children at parse time; text nodes keep -1
        self.index = -1
        self._norm: Optional[str] = None

    @property
    def is_text(self) -> bool:
        return self.kind is NodeKind.TEXT

    @property
    def is_element(self) -> bool:
        return self.kind is NodeKind.ELEMENT

    @property
    def norm_text(self) -> str:
        """Whitespace-collapsed text of a text node ('' for elements)."""
        if self._norm is None:
            self._norm = normalize_space(self.text) if self.kind is NodeKind.TEXT else ""
        return self._norm

    def element_children(self) -> list[DomNode]:
        return [c for c in self.children if c.kind is NodeKind.ELEMENT]

    def append(self, child: DomNode) -> DomNode:
        if child.kind is NodeKind.ELEMENT:
            child.index = sum(1 for c in self.children if c.kind is NodeKind.ELEMENT)
        child.parent = self
        self.children.append(child)
        return child

    def __repr__(self) -> str:
        if self.kind is NodeKind.TEXT:
            return f"<Text #{self.node_id} {self.norm_text[:30]!r}>"
        return f"<{self.tag} #{self.node_id} children={len(self.children)}>"


@dataclass
class Document:
    root: DomNode
    source_path: str = ""
    page_id: str = ""

    @property
    def body(self) -> DomNode:
        for child in self.root.element_children():
            if child.tag == "body":
                return child
        return self.root


@dataclass(frozen=True)
class Wrapper:
    """Tag signature of an attribute cell: the text's parent tag first, then
    ancestors up to (excluding) the enclosing block root."""

    signature: tuple[str, ...]

    def __post_init__(self):
        if not self.signature:
            raise ValueError("wrapper signature must be non-empty")

    def __str__(self) -> str:
        return "/".join(self.signature)


def _local_name(tag: str) -> str:
    if tag.startswith("{"):
        tag = tag.split("}", 1)[1]
    return tag.lower()


def parse_html(raw: bytes | str, page_id: str = "", source_path: str = "") -> Document:
    """Parse HTML into a :class:`Document`; comments and doctypes are dropped."""
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"input is not valid UTF-8: {exc}") from exc
    else:
        text = raw
    if not text.strip():
        raise EmptyInput("empty HTML input")

    etree_root = html5lib.parse(text, treebuilder="etree", namespaceHTMLElements=False)
    counter = 0

    def make_element(el) -> DomNode:
        nonlocal counter
        node = DomNode(NodeKind.ELEMENT, tag=_local_name(el.tag), attrs={_local_name(k): v for k, v in el.attrib.items()}, node_id=counter)
        counter += 1
        return node

    def make_text(s: str) -> DomNode:
        nonlocal counter
        node = DomNode(NodeKind.TEXT, text=s, node_id=counter)
        counter += 1
        return node

    root = make_element(etree_root)
    # explicit stack: pathological pages nest deeper than the recursion limit
    stack = [(etree_root, root)]
    while stack:
        el, node = stack.pop()
        pending = []
        if el.text:
            node.append(make_text(el.text))
        for child in el:
            if isinstance(child.tag, str) and not child.tag.startswith("<"):
                child_node = node.append(make_element(child))
                pending.append((child, child_node))
            if child.tail:
                node.append(make_text(child.tail))
        stack.extend(reversed(pending))
    # ids were handed out breadth-ish; renumber in document order so ids follow DFS preorder
    for i, n in enumerate(iter_tree(root)):
        n.node_id = i
    return Document(root=root, source_path=source_path, page_id=page_id)


def iter_tree(node: DomNode) -> Iterator[DomNode]:
    """Preorder walk including ``node`` itself."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if n.children:
            stack.extend(reversed(n.children))


def iter_descendants(node: DomNode) -> Iterator[DomNode]:
    it = iter_tree(node)
    next(it)
    return it


def text_descendants(node: DomNode, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> list[DomNode]:
    """Non-empty text nodes under ``node`` in document order, skipping
    blacklisted subtrees (including ``node`` itself when blacklisted)."""
    out = []
    stack = [node]
    while stack:
        n = stack.pop()
        if n.kind is NodeKind.TEXT:
            if n.norm_text:
                out.append(n)
        elif n.tag not in blacklist:
            stack.extend(reversed(n.children))
    return out


def has_text(node: DomNode, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> bool:
    stack = [node]
    while stack:
        n = stack.pop()
        if n.kind is NodeKind.TEXT:
            if n.norm_text:
                return True
        elif n.tag not in blacklist:
            stack.extend(n.children)
    return False


def decompose(node: DomNode) -> None:
    """Detach ``node`` (with its subtree) from its document."""
    parent = node.parent
    if parent is None:
        raise RootDecompose("cannot decompose a node without a parent")
    parent.children = [c for c in parent.children if c is not node]
    node.parent = None


def node_path(node: DomNode, root: Optional[DomNode] = None) -> tuple[int, ...]:
    """Element-index path from ``root`` (default: the topmost ancestor).

    Indices are the parse-time positions, so paths taken before and after
    a :func:`decompose` elsewhere in the tree still agree.
    """
    path = []
    n = node
    while n.parent is not None and n is not root:
        path.append(n.index)
        n = n.parent
    if root is not None and n is not root:
        raise PathError("node is not under the given root")
    return tuple(reversed(path))


def resolve_path(root: DomNode, path: Iterable[int]) -> DomNode:
    node = root
    for step in path:
        for child in node.children:
            if child.kind is NodeKind.ELEMENT and child.index == step:
                node = child
                break
        else:
            raise PathError(f"path {tuple(path)} does not resolve (stuck at {node!r}, step {step})")
    return node


def is_ancestor(a: DomNode, b: DomNode) -> bool:
    """True when ``a`` is a proper ancestor of ``b``."""
    n = b.parent
    while n is not None:
        if n is a:
            return True
        n = n.parent
    return False


def wrapper_of(text_node: DomNode, block: Optional[DomNode] = None) -> Wrapper:
    """Wrapper signature of a text node relative to ``block``.

    The parent tag is always included, even when the parent is the block
    root itself, so the signature is never empty.
    """
    if text_node.kind is not NodeKind.TEXT:
        raise ValueError("wrapper_of expects a text node")
    parent = text_node.parent
    if parent is None:
        raise ValueError("text node has no parent")
    sig = [parent.tag]
    n = parent.parent
    if parent is not block:
        while n is not None and n is not block:
            sig.append(n.tag)
            n = n.parent
    return Wrapper(tuple(sig))


def to_html(node: DomNode) -> str:
    parts: list[str] = []
    # entries are (node, raw) to open, or a closing-tag string
    stack: list = [(node, False)]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
            continue
        n, raw = item
        if n.kind is NodeKind.TEXT:
            parts.append(n.text if raw else html.escape(n.text, quote=False))
            continue
        attrs = "".join(f' {k}="{html.escape(v, quote=True)}"' for k, v in n.attrs.items())
        parts.append(f"<{n.tag}{attrs}>")
        if n.tag in VOID_ELEMENTS:
            continue
        stack.append(f"</{n.tag}>")
        child_raw = raw or n.tag in RAW_TEXT_ELEMENTS
        stack.extend((c, child_raw) for c in reversed(n.children))
    out = "".join(parts)
    if node.tag == "html":
        out = "<!DOCTYPE html>" + out
    return out


def text_of(node: DomNode, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> str:
    return " ".join(t.norm_text for t in text_descendants(node, blacklist))
