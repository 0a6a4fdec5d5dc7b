import statistics
import unicodedata

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prodspec.dom import DomNode, NodeKind, text_descendants
from prodspec.features import FEATURE_NAMES, FeatureStats, FilterFeatures, compute_filter_features, scale_features, unscale_features

from _helpers import by_id, parse


def enumerate_chars(block):
    """Reference counts: classify every character by its Unicode category."""
    texts = [t.norm_text for t in text_descendants(block)]
    chars = "".join(texts)
    alnum = sum(1 for c in chars if unicodedata.category(c)[0] == "L" or unicodedata.category(c) == "Nd" or c.isdigit())
    upper = sum(1 for c in chars if unicodedata.category(c) == "Lu")
    return len(texts), len(chars), alnum, upper


def test_ram_example():
    block = by_id(parse("<div id='d'><span>RAM</span><span>8 GB</span></div>").root, "d")
    f = compute_filter_features(block)
    assert f == FilterFeatures(2, 7, pytest.approx(6 / 7), 0, 0, pytest.approx(5 / 7))
    n, total, alnum, upper = enumerate_chars(block)
    assert (n, total) == (2, 7)
    assert f.alnum_ratio == alnum / total and f.upper_ratio == upper / total


def test_empty_and_script_only():
    doc = parse("<div id='e'></div><div id='s'><script>VAR X = 1</script></div>")
    assert compute_filter_features(by_id(doc.root, "e")) == FilterFeatures()
    assert compute_filter_features(by_id(doc.root, "s")) == FilterFeatures()


def test_images_and_links():
    doc = parse("<div id='d'><img src='a'><a href='/x'>X</a><a>bare</a><a href='  '>blank</a><p><img src='b'></p></div>")
    f = compute_filter_features(by_id(doc.root, "d"))
    assert f.n_images == 2
    assert f.n_links == 1
    assert f.n_text_fields == 3


def test_unicode_classes():
    block = by_id(parse("<div id='d'><span>Größe</span><span>ÄÖ ١٢</span></div>").root, "d")
    f = compute_filter_features(block)
    n, total, alnum, upper = enumerate_chars(block)
    assert f.total_text_len == total == 10
    assert f.alnum_ratio == alnum / total
    assert f.upper_ratio == upper / total


def test_scale_at_mean_is_zero():
    samples = [FilterFeatures(1, 10, 0.5, 0, 1, 0.1), FilterFeatures(3, 30, 0.7, 2, 1, 0.3), FilterFeatures(5, 20, 0.9, 1, 1, 0.2)]
    stats = FeatureStats.fit(samples)
    assert np.allclose(scale_features(np.array(stats.mean), stats), 0.0)
    # n_links has zero variance and maps to 0
    assert scale_features(samples[0], stats)[FEATURE_NAMES.index("n_links")] == 0.0


def test_scale_matches_direct_recomputation():
    samples = [FilterFeatures(1, 10, 0.5, 0, 1, 0.1), FilterFeatures(3, 30, 0.7, 2, 1, 0.3), FilterFeatures(5, 20, 0.9, 1, 1, 0.2)]
    stats = FeatureStats.fit(samples)
    cols = list(zip(*[[getattr(s, name) for name in FEATURE_NAMES] for s in samples]))
    for i, col in enumerate(cols):
        mu, sd = statistics.fmean(col), statistics.pstdev(col)
        want = (col[1] - mu) / sd if sd > 0 else 0.0
        assert scale_features(samples[1], stats)[i] == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_scale_roundtrip():
    samples = [FilterFeatures(1, 10, 0.5, 0, 1, 0.1), FilterFeatures(3, 30, 0.7, 2, 1, 0.3)]
    stats = FeatureStats.fit(samples)
    for s in samples:
        back = unscale_features(scale_features(s, stats), stats)
        assert np.allclose(back, s.as_array(), rtol=1e-9, atol=0)


# --------------------------------------------------------------- properties

text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), min_size=0, max_size=12)
cells = st.lists(st.tuples(st.sampled_from(["span", "div", "a", "img", "b"]), text), min_size=0, max_size=8)


def make_block(items):
    block = DomNode(NodeKind.ELEMENT, "div")
    for i, (tag, s) in enumerate(items):
        el = block.append(DomNode(NodeKind.ELEMENT, tag, attrs={"href": "/x"} if tag == "a" else {}, node_id=2 * i + 1))
        if tag != "img":
            el.append(DomNode(NodeKind.TEXT, text=s, node_id=2 * i + 2))
    return block


@given(cells)
def test_ranges(items):
    f = compute_filter_features(make_block(items))
    assert f.n_text_fields >= 0 and f.total_text_len >= 0 and f.n_images >= 0 and f.n_links >= 0
    assert 0.0 <= f.alnum_ratio <= 1.0 and 0.0 <= f.upper_ratio <= 1.0
    if f.total_text_len == 0:
        assert f.alnum_ratio == 0.0 and f.upper_ratio == 0.0


@given(cells, st.randoms(use_true_random=False))
def test_permutation_invariant(items, rnd):
    shuffled = list(items)
    rnd.shuffle(shuffled)
    a = compute_filter_features(make_block(items))
    b = compute_filter_features(make_block(shuffled))
    assert a.n_text_fields == b.n_text_fields and a.total_text_len == b.total_text_len
    assert a.n_images == b.n_images and a.n_links == b.n_links
    assert a.alnum_ratio == pytest.approx(b.alnum_ratio) and a.upper_ratio == pytest.approx(b.upper_ratio)


@given(cells, text)
def test_appending_text_is_monotone(items, extra):
    block = make_block(items)
    before = compute_filter_features(block)
    block.append(DomNode(NodeKind.TEXT, text=extra, node_id=999))
    after = compute_filter_features(block)
    assert after.n_text_fields >= before.n_text_fields
    assert after.total_text_len >= before.total_text_len
