"""Corpus files, labeled blocks, ground truth and a synthetic page generator.

All files are UTF-8 JSON lines with a ``schema`` version field:

manifest   ``{"schema", "page_id", "html_path", "split", "source", "category"}``
labels     ``{"schema", "page_id", "block_path", "label"}``  (label: spec | non_spec)
truth      ``{"schema", "page_id", "attribute", "value"}``

``html_path`` is resolved relative to the manifest file. ``block_path`` is
the list of element-child indices leading from ``<html>`` to the block.
"""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass, field
from html import escape
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from .dom import DEFAULT_BLACKLIST, Document, NodeKind, TagBlacklist, decompose, has_text, node_path, parse_html, resolve_path
from .errors import PathError, ValidationError
from .labels import Label

SCHEMA_VERSION = 1
SPLITS = ("train", "validation", "holdout")


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class ManifestEntry:
    page_id: str
    html_path: Path
    split: str
    source: str = ""
    category: str = ""


@dataclass(frozen=True)
class BlockLabel:
    page_id: str
    block_path: tuple[int, ...]
    label: Label


@dataclass
class GroundTruth:
    page_id: str
    pairs: set[tuple[str, str]] = field(default_factory=set)


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if rec.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
                raise ValidationError(f"{path}:{lineno}: unsupported schema {rec.get('schema')!r}")
            yield lineno, rec


def write_jsonl(path: Union[str, Path], records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({"schema": SCHEMA_VERSION, **rec}, ensure_ascii=False) + "\n")


def load_manifest(path: Union[str, Path], check_paths: bool = True) -> list[ManifestEntry]:
    path = Path(path)
    entries, seen = [], set()
    for lineno, rec in _iter_jsonl(path):
        try:
            pid, html_path, split = rec["page_id"], rec["html_path"], rec["split"]
        except KeyError as exc:
            raise ValidationError(f"{path}:{lineno}: missing field {exc}") from exc
        if pid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate page_id {pid!r}")
        if split not in SPLITS:
            raise ValidationError(f"{path}:{lineno}: unknown split {split!r}")
        full = (path.parent / html_path).resolve()
        if check_paths and not full.exists():
            raise ValidationError(f"{path}:{lineno}: missing HTML file {full}")
        seen.add(pid)
        entries.append(ManifestEntry(pid, full, split, rec.get("source", ""), rec.get("category", "")))
    return entries


def save_manifest(path: Union[str, Path], entries: Iterable[ManifestEntry]) -> None:
    base = Path(path).resolve().parent
    recs = []
    for e in entries:
        p = Path(e.html_path)
        try:
            rel = p.resolve().relative_to(base)
        except ValueError:
            rel = p
        recs.append({"page_id": e.page_id, "html_path": str(rel), "split": e.split, "source": e.source, "category": e.category})
    write_jsonl(path, recs)


def load_labels(path: Union[str, Path]) -> list[BlockLabel]:
    out = []
    for lineno, rec in _iter_jsonl(Path(path)):
        try:
            out.append(BlockLabel(rec["page_id"], tuple(int(i) for i in rec["block_path"]), Label(rec["label"])))
        except (KeyError, ValueError, TypeError) as exc:
            raise ValidationError(f"{path}:{lineno}: bad label record ({exc})") from exc
    return out


def save_labels(path: Union[str, Path], labels: Iterable[BlockLabel]) -> None:
    write_jsonl(path, ({"page_id": b.page_id, "block_path": list(b.block_path), "label": b.label.value} for b in labels))


def load_ground_truth(path: Union[str, Path]) -> list[GroundTruth]:
    """Group pair records by page. Empty attributes or values are rejected;
    a repeated pair within a page is kept once, with a warning."""
    by_page: dict[str, GroundTruth] = {}
    for lineno, rec in _iter_jsonl(Path(path)):
        try:
            pid, attr, value = rec["page_id"], rec["attribute"], rec["value"]
        except KeyError as exc:
            raise ValidationError(f"{path}:{lineno}: missing field {exc}") from exc
        attr, value = " ".join(str(attr).split()), " ".join(str(value).split())
        if not attr or not value:
            raise ValidationError(f"{path}:{lineno}: empty attribute or value")
        gt = by_page.setdefault(pid, GroundTruth(pid))
        if (attr, value) in gt.pairs:
            warnings.warn(f"{path}:{lineno}: duplicate pair ({attr!r}, {value!r}) on page {pid!r} collapsed", stacklevel=2)
        gt.pairs.add((attr, value))
    return list(by_page.values())


def save_ground_truth(path: Union[str, Path], truths: Iterable[GroundTruth]) -> None:
    write_jsonl(path, ({"page_id": g.page_id, "attribute": a, "value": v} for g in truths for a, v in sorted(g.pairs)))


def load_document(entry: ManifestEntry) -> Document:
    return parse_html(Path(entry.html_path).read_bytes(), page_id=entry.page_id, source_path=str(entry.html_path))


# ---------------------------------------------------------------- negatives

def harvest_negative_blocks(
    doc: Document,
    spec_paths: Sequence[Sequence[int]],
    skip_top: int = 3,
    blacklist: TagBlacklist = DEFAULT_BLACKLIST,
) -> list[BlockLabel]:
    """Label every remaining multi-child text block under ``<body>`` as non-spec.

    Spec blocks are removed first so that none of their parts is mislabeled.
    The first ``skip_top`` harvested blocks (the page-level giants near the
    top of the tree) are dropped. ``doc`` is mutated.
    """
    spec_nodes = [resolve_path(doc.root, p) for p in spec_paths]
    for n in spec_nodes:
        if n.parent is not None:
            decompose(n)
    out = []
    stack = [doc.body]
    while stack:
        n = stack.pop()
        if n.tag in blacklist or not has_text(n, blacklist):
            continue
        kids = n.element_children()
        if len(kids) > 1:
            out.append(BlockLabel(doc.page_id, node_path(n), Label.NON_SPEC))
        stack.extend(reversed(kids))
    return out[skip_top:]


# ---------------------------------------------------------------- synthetic corpus

VOCABS = ("ul_div", "dl_dt_span", "div_span", "table")

# values for the bundled seed attributes
SEED_VALUES: dict[str, list[str]] = {
    "Brand": ["LG", "Samsung", "Whirlpool", "Sony", "Bosch", "Philips", "Haier", "Panasonic", "Lenovo", "Godrej"],
    "Model": ["T70SKSF1Z", "WA65A4002VS", "UA43T5450", "IdeaPad Slim 3", "RT28A3453S8"],
    "Model Name": ["Smart Inverter", "Crystal 4K", "Stainwash Pro", "Bravia X75", "Frost Free Plus"],
    "Model Number": ["FHM1207ZDL", "WW70T502DAX", "43UQ7500PSF", "82H801L7IN", "GF-B201APZY"],
    "Color": ["Black", "Silver", "White", "Midnight Blue", "Graphite Grey", "Titan Grey"],
    "Type": ["Fully Automatic", "Semi Automatic", "Split", "Window", "Double Door"],
    "Capacity": ["6.2 kg", "7 kg", "8 kg", "253 L", "1.5 Ton"],
    "Weight": ["1.65 kg", "31 kg", "8.2 kg", "45 kg"],
    "Dimensions": ["55 x 85 x 60 cm", "96.8 x 56.3 x 7.8 cm", "32.4 x 22.6 x 1.8 cm"],
    "Warranty": ["1 Year", "2 Years on Product", "10 Years on Motor", "5 Years Comprehensive"],
    "Material": ["Stainless Steel", "Plastic", "Aluminium", "Tempered Glass"],
    "Power Consumption": ["2000 W", "150 W", "1.2 kWh/day", "65 W"],
    "Voltage": ["230 V", "220 - 240 V", "110 V"],
    "Wattage": ["1500 W", "750 W", "45 W"],
    "Display Size": ["15.6 inch", "108 cm (43 inch)", "6.5 inch"],
    "Screen Size": ["14 inch", "55 inch", "6.1 inch"],
    "Resolution": ["1920 x 1080", "3840 x 2160", "Full HD", "Ultra HD (4K)"],
    "Refresh Rate": ["60 Hz", "120 Hz", "144 Hz"],
    "Processor": ["Intel Core i5 12th Gen", "AMD Ryzen 5 5500U", "Snapdragon 695", "Apple M2"],
    "RAM": ["8 GB", "16 GB", "4 GB DDR4"],
    "Storage": ["512 GB SSD", "1 TB HDD", "128 GB"],
    "Operating System": ["Windows 11 Home", "Android 13", "macOS", "webOS"],
    "Battery Capacity": ["5000 mAh", "4500 mAh", "56 Wh"],
    "Battery Life": ["Up to 10 hours", "8 hours", "2 days"],
    "Connectivity": ["Wi-Fi, Bluetooth", "USB, HDMI", "5G, 4G LTE"],
    "Bluetooth": ["Yes", "v5.0", "v5.3"],
    "Wi-Fi": ["802.11ax", "Dual Band", "Yes"],
    "USB Ports": ["2", "3 x USB 3.2", "1"],
    "HDMI Ports": ["2", "3", "1 x HDMI 2.1"],
    "Energy Rating": ["3 Star", "5 Star", "4 Star"],
    "Installation Type": ["Freestanding", "Wall Mount", "Built-in"],
    "Washing Method": ["Top Load", "Front Load", "Pulsator"],
    "Frequency": ["50 Hz", "50/60 Hz"],
    "Noise Level": ["42 dB", "55 dB", "38 dB"],
    "Country of Origin": ["India", "China", "Thailand", "Korea"],
    "Net Quantity": ["1 N", "1 Unit", "500 g"],
    "Front Camera": ["16 MP", "32 MP", "8 MP"],
    "Rear Camera": ["50 MP + 2 MP", "108 MP", "12 MP Dual"],
    "Graphics": ["Intel Iris Xe", "NVIDIA RTX 3050", "Integrated"],
    "Speaker Output": ["20 W", "40 W Dolby Audio", "2 x 2 W"],
    "Cooling Capacity": ["5000 W", "3500 W", "1.5 Ton"],
    "Refrigerant": ["R32", "R600a", "R410A"],
    "Compressor Type": ["Inverter", "Rotary", "Reciprocating"],
    "Number of Doors": ["1", "2", "3"],
    "Purity": ["99%", "98.5%", "AR Grade"],
}

# attribute names that are not in the default seed pool
EXTRA_VALUES: dict[str, list[str]] = {
    "Spin Speed": ["700 RPM", "1200 RPM", "1400 RPM"],
    "Wash Programs": ["8", "10", "14 Programs"],
    "Child Lock": ["Yes", "No"],
    "Inverter Technology": ["Yes", "Smart Inverter"],
    "Drum Material": ["Stainless Steel", "Diamond Drum"],
    "Water Level Selector": ["6 Levels", "Auto"],
    "Auto Restart": ["Yes", "No"],
    "Defrosting Type": ["Frost Free", "Direct Cool"],
    "Shelf Material": ["Toughened Glass", "Wire"],
    "Freezer Capacity": ["63 L", "82 L"],
    "Touchscreen": ["Yes", "No"],
    "Backlit Keyboard": ["Yes", "No"],
    "Fingerprint Sensor": ["Yes", "Side Mounted"],
    "SIM Type": ["Dual SIM", "Single SIM"],
    "Network Type": ["5G", "4G VoLTE"],
    "Expandable Storage": ["Up to 1 TB", "No"],
    "HDR Support": ["HDR10", "Dolby Vision"],
    "Smart TV": ["Yes", "No"],
    "Panel Type": ["IPS", "VA", "OLED"],
    "Viewing Angle": ["178 degree", "170 degree"],
    "Air Filter": ["PM 2.5 Filter", "Anti Bacterial"],
    "Condenser Coil": ["Copper", "Aluminium"],
    "Remote Control": ["Yes", "Universal Remote"],
    "Timer": ["24 Hours", "Yes"],
    "Sleep Mode": ["Yes", "No"],
    "Finish": ["Glossy", "Matte"],
    "Surface Type": ["Polished", "Rustic"],
    "Application Area": ["Bathroom", "Kitchen", "Living Room"],
    "Molecular Formula": ["C6H12O6", "NaCl", "H2SO4"],
    "CAS Number": ["50-99-7", "7647-14-5"],
    "Shelf Life": ["24 Months", "12 Months"],
    "Storage Temperature": ["2 to 8 C", "Room Temperature"],
    "Pack Size": ["500 ml", "2.5 L", "100 g"],
    "Grade": ["AR", "LR", "Extra Pure"],
    "Mounting": ["Desk Stand", "Wall"],
    "Audio Jack": ["3.5 mm", "No"],
    "Webcam": ["720p HD", "1080p FHD"],
    "Keyboard": ["Full Size", "Compact"],
    "Screen Type": ["Touch", "Non-Touch"],
    "Body Material": ["Polycarbonate", "Metal"],
}

TITLES = ["Specifications", "General", "Technical Details", "Product Details", "Key Specs", "In The Box"]
CATEGORIES = ["Laptop", "TV", "Washing Machine", "Refrigerator", "AC", "Smartphone"]
NAV_WORDS = ["Home", "Laptops", "Televisions", "Appliances", "Mobiles", "Offers", "Deals", "Audio", "Cameras", "Gaming", "Accessories", "Kitchen"]
SENTENCE_WORDS = (
    "this product offers great value with a sleek design and reliable performance for everyday use "
    "enjoy smart features long lasting build quality and easy maintenance designed for modern homes "
    "delivery returns available customers love the quiet operation and energy efficient motor"
).split()
REVIEW_NAMES = ["Ravi K", "Anita S", "John D", "Priya M", "Arjun R", "Meera P", "Sam T"]
OFFER_TEXT = ["Bank Offer 10% off on Credit Cards", "No Cost EMI available", "Exchange offer up to Rs 2000 off", "Free delivery by tomorrow"]


class _E:
    """Minimal element builder used to emit generator pages."""

    __slots__ = ("tag", "attrs", "children")

    def __init__(self, tag: str, attrs: Optional[dict] = None, children: Optional[list] = None):
        self.tag = tag
        self.attrs = attrs or {}
        self.children = children or []

    def html(self) -> str:
        a = "".join(f' {k}="{escape(str(v))}"' for k, v in self.attrs.items())
        if self.tag in ("img", "br", "meta", "hr"):
            return f"<{self.tag}{a}>"
        inner = "".join(c.html() if isinstance(c, _E) else escape(c, quote=False) for c in self.children)
        return f"<{self.tag}{a}>{inner}</{self.tag}>"

    def element_children(self) -> list["_E"]:
        return [c for c in self.children if isinstance(c, _E)]

    def count(self) -> int:
        return 1 + sum(c.count() if isinstance(c, _E) else 1 for c in self.children)


def _path_to(root: _E, target: _E) -> tuple[int, ...]:
    stack = [(root, ())]
    while stack:
        node, path = stack.pop()
        if node is target:
            return path
        for i, child in enumerate(node.element_children()):
            stack.append((child, path + (i,)))
    raise PathError("target not in tree")


@dataclass(frozen=True)
class SyntheticConfig:
    n_pages: int = 10
    tag_vocab: str = "mixed"
    rows_per_block: tuple[int, int] = (3, 20)
    decoys: tuple[int, int] = (0, 5)
    seed: int = 0
    title_prob: float = 0.5
    separator_prob: float = 0.3
    min_seed_rows: int = 2
    harvest_negatives: bool = True
    skip_top: int = 3
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.n_pages < 1:
            raise ValueError("n_pages must be >= 1")
        if self.tag_vocab not in VOCABS + ("mixed",):
            raise ValueError(f"unknown tag vocabulary {self.tag_vocab!r}")


@dataclass
class SyntheticPage:
    page_id: str
    html: str
    split: str
    source: str
    category: str
    vocab: str
    spec_path: tuple[int, ...]
    n_nodes: int


@dataclass
class SyntheticCorpus:
    pages: list[SyntheticPage]
    labels: list[BlockLabel]
    truths: list[GroundTruth]

    def write(self, out_dir: Union[str, Path]) -> dict[str, Path]:
        out = Path(out_dir)
        (out / "pages").mkdir(parents=True, exist_ok=True)
        entries = []
        for p in self.pages:
            f = out / "pages" / f"{p.page_id}.html"
            f.write_text(p.html, encoding="utf-8")
            entries.append(ManifestEntry(p.page_id, f, p.split, p.source, p.category))
        paths = {"manifest": out / "manifest.jsonl", "labels": out / "labels.jsonl", "truth": out / "truth.jsonl"}
        save_manifest(paths["manifest"], entries)
        save_labels(paths["labels"], self.labels)
        save_ground_truth(paths["truth"], self.truths)
        return paths


def _value_for(rng: random.Random, attr: str) -> str:
    pool = SEED_VALUES.get(attr) or EXTRA_VALUES.get(attr)
    return rng.choice(pool)


def _sentence(rng: random.Random, n: int) -> str:
    words = [rng.choice(SENTENCE_WORDS) for _ in range(n)]
    return " ".join(words).capitalize() + "."


def _spec_block(rng: random.Random, vocab: str, rows: list[tuple[str, str]], title: Optional[str], separator_prob: float) -> _E:
    sep = rng.random() < separator_prob
    if vocab == "ul_div":
        items = [_E("li", {"class": "spec-row"}, [_E("div", {"class": "k"}, [a]), _E("div", {"class": "v"}, [v])]) for a, v in rows]
        if title:
            items.insert(0, _E("li", {"class": "spec-title"}, [_E("div", {}, [title])]))
        return _E("ul", {"class": "specs"}, items)
    if vocab == "dl_dt_span":
        items = [_E("dl", {}, [_E("dt", {}, [_E("span", {}, [a])]), _E("dd", {}, [_E("span", {}, [v])])]) for a, v in rows]
        if title:
            items.insert(0, _E("h3", {}, [title]))
        return _E("div", {"class": "attr-list"}, items)
    if vocab == "div_span":
        def row(a, v):
            cells = [_E("span", {"class": "name"}, [a])]
            if sep:
                cells.append(_E("span", {"class": "sep"}, [":"]))
            cells.append(_E("span", {"class": "value"}, [v]))
            return _E("div", {"class": "row"}, cells)
        items = [row(a, v) for a, v in rows]
        if title:
            items.insert(0, _E("div", {"class": "head"}, [_E("span", {}, [title])]))
        return _E("div", {"class": "spec-grid"}, items)
    if vocab == "table":
        trs = [_E("tr", {}, [_E("th", {}, [a]), _E("td", {}, [v])]) for a, v in rows]
        if title:
            trs.insert(0, _E("tr", {}, [_E("th", {"colspan": "2"}, [title])]))
        return _E("table", {"class": "spec-table"}, [_E("tbody", {}, trs)])
    raise ValueError(vocab)


def _decoy(rng: random.Random, kind: str, vocab: str = "ul_div") -> _E:
    if kind == "nav_list":
        words = rng.sample(NAV_WORDS, rng.randint(4, 8))
        return _E("div", {"class": "links"}, [_E("ul", {}, [_E("li", {}, [_E("a", {"href": f"/c/{w.lower()}"}, [w])]) for w in words])])
    if kind == "description":
        seed_attr = rng.choice(list(SEED_VALUES))
        para = _E("p", {}, [_sentence(rng, rng.randint(8, 20)) + " ", _E("b", {}, [seed_attr]), " " + _sentence(rng, rng.randint(6, 15))])
        return _E("div", {"class": "description"}, [_E("h2", {}, ["Description"]), para, _E("p", {}, [_sentence(rng, rng.randint(10, 25))])])
    if kind == "reviews":
        reviews = []
        for _ in range(rng.randint(2, 4)):
            head = _E("div", {"class": "meta"}, [_E("span", {"class": "stars"}, ["★" * rng.randint(1, 5)]), _E("span", {}, [rng.choice(REVIEW_NAMES)])])
            reviews.append(_E("div", {"class": "review"}, [head, _E("p", {}, [_sentence(rng, rng.randint(6, 18))])]))
        return _E("div", {"class": "reviews"}, [_E("h3", {}, ["Customer Reviews"])] + reviews)
    if kind == "related":
        cards = []
        for _ in range(rng.randint(3, 6)):
            name = f"{rng.choice(SEED_VALUES['Brand'])} {rng.choice(CATEGORIES)}"
            price = f"Rs {rng.randint(5, 90)},{rng.randint(100, 999)}"
            cards.append(_E("div", {"class": "card"}, [_E("a", {"href": "/p/x"}, [_E("img", {"src": "x.jpg"})]), _E("span", {}, [name]), _E("span", {}, [price])]))
        return _E("div", {"class": "related"}, [_E("h3", {}, ["Similar Products"]), _E("div", {"class": "grid"}, cards)])
    if kind == "qa":
        items = []
        for _ in range(rng.randint(2, 4)):
            q = _E("div", {"class": "q"}, [_E("span", {}, ["Q"]), _E("span", {}, [_sentence(rng, rng.randint(4, 9))])])
            a = _E("div", {"class": "a"}, [_E("span", {}, ["A"]), _E("span", {}, [_sentence(rng, rng.randint(4, 12))])])
            items.append(_E("div", {"class": "qa-item"}, [q, a]))
        return _E("div", {"class": "qa"}, [_E("h3", {}, ["Questions and Answers"])] + items)
    if kind == "offers":
        lis = [_E("li", {}, [_E("img", {"src": "tag.png"}), _E("span", {}, [t])]) for t in rng.sample(OFFER_TEXT, rng.randint(2, 4))]
        return _E("div", {"class": "offers"}, [_E("h4", {}, ["Available Offers"]), _E("ul", {}, lis)])
    if kind == "compare":
        # another product's key facts in the same markup as the real block
        attrs = rng.sample(["Brand", "Model", "Color", "Capacity", "Warranty", "Energy Rating"], rng.randint(3, 5))
        rows = [(a, _value_for(rng, a)) for a in attrs]
        return _E("div", {"class": "compare"}, [_E("h3", {}, ["Compare with similar items"]), _spec_block(rng, vocab, rows, None, 0.0)])
    raise ValueError(kind)


DECOY_KINDS = ("nav_list", "description", "reviews", "related", "qa", "offers", "compare")


def _draw(rng: random.Random, spec: Union[int, tuple[int, int]]) -> int:
    if isinstance(spec, int):
        return spec
    lo, hi = spec
    return rng.randint(lo, hi)


def _split_for(i: int, n: int, fractions: tuple[float, float, float]) -> str:
    a = int(round(n * fractions[0]))
    b = a + int(round(n * fractions[1]))
    return "train" if i < a else "validation" if i < b else "holdout"


def generate_synthetic_corpus(cfg: SyntheticConfig = SyntheticConfig()) -> SyntheticCorpus:
    """Seeded product pages, each with one specification block among decoys."""
    rng = random.Random(cfg.seed)
    seed_attrs = list(SEED_VALUES)
    all_attrs = seed_attrs + list(EXTRA_VALUES)
    pages, labels, truths = [], [], []
    for i in range(cfg.n_pages):
        vocab = VOCABS[i % len(VOCABS)] if cfg.tag_vocab == "mixed" else cfg.tag_vocab
        n_rows = _draw(rng, cfg.rows_per_block)
        n_seed = min(cfg.min_seed_rows, n_rows)
        attrs = rng.sample(seed_attrs, n_seed)
        rest = [a for a in all_attrs if a not in attrs]
        attrs += rng.sample(rest, n_rows - n_seed)
        rng.shuffle(attrs)
        rows = [(a, _value_for(rng, a)) for a in attrs]
        title = rng.choice(TITLES) if rng.random() < cfg.title_prob else None
        block = _spec_block(rng, vocab, rows, title, cfg.separator_prob)

        category = rng.choice(CATEGORIES)
        product = f"{rows[0][1] if rows[0][0] == 'Brand' else rng.choice(SEED_VALUES['Brand'])} {category} {rng.randint(100, 999)}"
        spec_section = _E("div", {"class": "spec-section"}, [_E("h2", {}, ["Specifications"]), block])
        info = _E("div", {"class": "info"}, [
            _E("h1", {}, [product]),
            _E("div", {"class": "price"}, [_E("span", {}, [f"Rs {rng.randint(5, 90)},{rng.randint(100, 999)}"]), _E("span", {"class": "mrp"}, ["Inclusive of all taxes"])]),
        ])
        gallery = _E("div", {"class": "gallery"}, [_E("img", {"src": f"img{k}.jpg"}) for k in range(rng.randint(2, 5))])
        product_div = _E("div", {"class": "product"}, [gallery, info])
        content = [
            _E("div", {"class": "breadcrumb"}, [_E("a", {"href": "/"}, ["Home"]), _E("span", {}, [">"]), _E("a", {"href": f"/c/{category.lower()}"}, [category])]),
            product_div,
        ]
        n_decoys = _draw(rng, cfg.decoys)
        decoys = [_decoy(rng, rng.choice(DECOY_KINDS), vocab) for _ in range(n_decoys)]
        # the specification block lands somewhere among the decoys, after the product header
        pos = rng.randint(0, len(decoys))
        content += decoys[:pos] + [spec_section] + decoys[pos:]
        body = _E("body", {}, [
            _E("header", {}, [_E("nav", {}, [_E("ul", {}, [_E("li", {}, [_E("a", {"href": "/"}, [w])]) for w in NAV_WORDS[:6]])])]),
            _E("div", {"class": "page"}, content),
            _E("footer", {}, [_E("p", {}, ["Copyright 2021 Example Store"]), _E("a", {"href": "/help"}, ["Help"])]),
        ])
        head = _E("head", {}, [_E("meta", {"charset": "utf-8"}), _E("title", {}, [product]), _E("style", {}, [".k{font-weight:bold}"])])
        root = _E("html", {}, [head, body])
        html_text = "<!DOCTYPE html>" + root.html()

        pid = f"syn-{cfg.seed}-{i:05d}"
        # a table's rows hang off its single <tbody>, which is the block the traversal can accept
        labeled = block.children[0] if vocab == "table" else block
        spec_path = _path_to(root, labeled)
        pages.append(SyntheticPage(pid, html_text, _split_for(i, cfg.n_pages, cfg.split_fractions), f"synthetic-{vocab}", category, vocab, spec_path, root.count()))
        labels.append(BlockLabel(pid, spec_path, Label.SPEC))
        if cfg.harvest_negatives:
            doc = parse_html(html_text, page_id=pid)
            labels.extend(harvest_negative_blocks(doc, [spec_path], cfg.skip_top))
        truths.append(GroundTruth(pid, set(rows)))
    return SyntheticCorpus(pages, labels, truths)
