import html as htmllib

import pytest
from hypothesis import given, strategies as st

from prodspec.dom import (
    DEFAULT_BLACKLIST,
    NodeKind,
    TagBlacklist,
    Wrapper,
    decompose,
    has_text,
    is_ancestor,
    iter_tree,
    node_path,
    parse_html,
    resolve_path,
    text_descendants,
    to_html,
    wrapper_of,
)
from prodspec.errors import EmptyInput, EncodingError, PathError, RootDecompose

from _helpers import by_id, first, parse, structure

# --------------------------------------------------------------- random trees

TAGS = ["div", "span", "b", "em", "section", "article"]
words = st.text(alphabet="abcXYZ019 &<>", min_size=1, max_size=8)


def _tree(depth):
    leaf = words.map(lambda w: ("#text", w))
    if depth == 0:
        return leaf
    return st.one_of(
        leaf,
        st.tuples(st.sampled_from(TAGS), st.lists(_tree(depth - 1), max_size=4)),
    )


trees = st.tuples(st.sampled_from(TAGS), st.lists(_tree(3), min_size=1, max_size=5))


def render(t) -> str:
    if t[0] == "#text":
        return htmllib.escape(t[1], quote=False)
    return f"<{t[0]}>" + "".join(render(c) for c in t[1]) + f"</{t[0]}>"


def page(t) -> str:
    return f"<html><body>{render(t)}</body></html>"


# --------------------------------------------------------------- examples

def test_two_spans_structure():
    doc = parse("<div><span>RAM</span><span>8 GB</span></div>")
    div = first(doc.root, "div")
    assert structure(div) == ("div", [("span", ["RAM"]), ("span", ["8 GB"])])


@pytest.mark.parametrize("raw", ["", b"", "   \n\t "])
def test_empty_input(raw):
    with pytest.raises(EmptyInput):
        parse_html(raw)


def test_invalid_utf8():
    with pytest.raises(EncodingError):
        parse_html(b"<p>caf\xe9</p>")


def test_unclosed_li_matches_reference_parser():
    lxml_html = pytest.importorskip("lxml.html")
    snippet = "<ul><li>Brand<li>LG</ul>"
    ref = lxml_html.fromstring(snippet)
    ref_shape = (ref.tag, [(li.tag, [li.text]) for li in ref])
    ours = structure(first(parse(snippet).root, "ul"))
    assert ours == ref_shape == ("ul", [("li", ["Brand"]), ("li", ["LG"])])


def test_tags_lowercased_and_comments_dropped():
    doc = parse("<DIV CLASS='x'><!-- hidden --><SPAN>a</SPAN></DIV>")
    div = first(doc.root, "div")
    assert div.attrs == {"class": "x"}
    assert [c.tag for c in div.children] == ["span"]


def test_text_descendants_examples():
    doc = parse("<div id='a'><span>RAM</span><span>8 GB</span></div><div id='b'><script>var x=1</script></div>")
    assert [t.norm_text for t in text_descendants(by_id(doc.root, "a"))] == ["RAM", "8 GB"]
    assert text_descendants(by_id(doc.root, "b")) == []


WASHER = """
<ul id="block">
  <li><span>Brand</span><span>LG</span></li>
  <li><span>Installation Type</span><span>Fully Automatic Front Load</span></li>
  <li><span>Capacity</span><span>7 kg</span></li>
  <li><span>Spin Speed</span><span>1200 rpm</span></li>
  <li><span>Washing Method</span><span>Tumble</span></li>
  <li><span>Color</span><span>Silver</span></li>
</ul>"""


def _dfs_texts(node):
    # recursive reference walk, independent of the library's stack walk
    out = []
    for c in node.children:
        if c.kind is NodeKind.TEXT:
            if " ".join(c.text.split()):
                out.append(" ".join(c.text.split()))
        elif c.tag not in DEFAULT_BLACKLIST:
            out.extend(_dfs_texts(c))
    return out


def test_washer_block_row_major():
    block = by_id(parse(WASHER).root, "block")
    texts = [t.norm_text for t in text_descendants(block)]
    assert len(texts) == 12
    assert texts == _dfs_texts(block)
    assert texts[:4] == ["Brand", "LG", "Installation Type", "Fully Automatic Front Load"]


def test_decompose_middle_child():
    doc = parse("<div id='p'><i>a</i><b>b</b><u>c</u></div>")
    p = by_id(doc.root, "p")
    decompose(p.children[1])
    assert [c.tag for c in p.children] == ["i", "u"]


def test_decompose_root():
    with pytest.raises(RootDecompose):
        decompose(parse("<p>x</p>").root)


def test_wrapper_examples():
    doc = parse("<ul id='u'><li><span class='k'>RAM</span><span>8</span></li><li><span class='k'>ROM</span></li></ul>")
    u = by_id(doc.root, "u")
    ram, rom = [t for t in text_descendants(u) if t.norm_text in ("RAM", "ROM")]
    assert wrapper_of(ram, u).signature == ("span", "li")
    assert wrapper_of(ram, u) == wrapper_of(rom, u)
    # without a block the signature runs to the document root
    assert wrapper_of(ram).signature[:3] == ("span", "li", "ul")


def test_wrapper_dl_dt():
    doc = parse("<div id='blk'><dl><dt><span>Brand</span></dt><dd>LG</dd></dl></div>")
    blk = by_id(doc.root, "blk")
    t = text_descendants(blk)[0]
    assert wrapper_of(t, blk).signature == ("span", "dt", "dl")


def test_wrapper_parent_is_block():
    doc = parse("<div id='blk'>Brand<span>x</span></div>")
    blk = by_id(doc.root, "blk")
    assert wrapper_of(text_descendants(blk)[0], blk).signature == ("div",)


def test_wrapper_must_be_nonempty():
    with pytest.raises(ValueError):
        Wrapper(())


def test_blacklist_validation():
    with pytest.raises(ValueError):
        TagBlacklist([])
    with pytest.raises(ValueError):
        TagBlacklist(["DIV"])
    assert "script" in DEFAULT_BLACKLIST


def test_paths_survive_decompose():
    doc = parse("<div><p id='a'>1</p><p id='b'>2</p><p id='c'>3</p></div>")
    c = by_id(doc.root, "c")
    before = node_path(c)
    decompose(by_id(doc.root, "a"))
    assert node_path(c) == before
    assert resolve_path(doc.root, before) is c
    with pytest.raises(PathError):
        resolve_path(doc.root, node_path(by_id(parse("<div><p id='a'>1</p></div>").root, "a")) + (5,))


def test_has_text_ignores_whitespace_and_blacklist():
    doc = parse("<div id='a'>   <style>p{}</style>\n</div><div id='b'> x </div>")
    assert not has_text(by_id(doc.root, "a"))
    assert has_text(by_id(doc.root, "b"))


# --------------------------------------------------------------- properties

@given(trees)
def test_tree_invariants(t):
    doc = parse_html(page(t))
    nodes = list(iter_tree(doc.root))
    assert sum(1 for n in nodes if n.parent is None) == 1
    assert len({n.node_id for n in nodes}) == len(nodes)
    for n in nodes:
        if n.kind is NodeKind.TEXT:
            assert n.children == []
        for c in n.children:
            assert c.parent is n
        if n.parent is not None:
            assert any(c is n for c in n.parent.children)
    assert doc.root.kind is NodeKind.ELEMENT


@given(trees)
def test_text_descendants_compositional(t):
    body = parse_html(page(t)).body
    whole = text_descendants(body)
    parts = []
    for c in body.children:
        if c.kind is NodeKind.TEXT:
            if c.norm_text:
                parts.append(c)
        else:
            parts.extend(text_descendants(c))
    assert [n.node_id for n in whole] == [n.node_id for n in parts]


@given(trees)
def test_parse_serialize_fixed_point(t):
    first_doc = parse_html(page(t))
    second = parse_html(to_html(first_doc.root))
    assert structure(first_doc.root) == structure(second.root)


@given(trees, st.data())
def test_decomposed_ids_never_reappear(t, data):
    doc = parse_html(page(t))
    candidates = [n for n in iter_tree(doc.body) if n is not doc.body]
    victim = data.draw(st.sampled_from(candidates))
    gone = {n.node_id for n in iter_tree(victim)}
    decompose(victim)
    seen = {n.node_id for n in iter_tree(doc.root)}
    assert not gone & seen
    assert not any(is_ancestor(victim, n) for n in iter_tree(doc.root))
