"""Block- and pair-level scoring plus the end-to-end evaluation loop."""

from __future__ import annotations

import json
import logging
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from .classify import Arrangement, Candidate, Stage, classify_document, coarse_stage, filter_stage
from .dataset import BlockLabel, GroundTruth, ManifestEntry, load_document
from .dom import DEFAULT_BLACKLIST, TagBlacklist, normalize_space, parse_html
from .extract import AttrValuePair, ColumnMode, SeedPool, extract_specifications
from .labels import Label
from .pipeline import Models

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, n_pred: int, n_true: int) -> "PRF":
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_true if n_true else 0.0
        return cls(p, r, f1_score(p, r))


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def score_classification(
    predicted: Iterable[tuple[str, Sequence[int]]],
    labels: Iterable[BlockLabel],
    ancestor_match: bool = False,
) -> PRF:
    """Micro P/R/F1 over blocks; a prediction is correct when its path equals a spec path.

    ``ancestor_match`` (analysis only) also credits a prediction that
    contains a spec block.
    """
    spec = {(lb.page_id, tuple(lb.block_path)) for lb in labels if lb.label is Label.SPEC}
    pred = {(pid, tuple(path)) for pid, path in predicted}
    if not ancestor_match:
        tp = len(pred & spec)
        return PRF.from_counts(tp, len(pred), len(spec))
    spec_by_page: dict[str, list[tuple[int, ...]]] = defaultdict(list)
    for pid, path in spec:
        spec_by_page[pid].append(path)
    good_pred = sum(1 for pid, path in pred if any(s[:len(path)] == path for s in spec_by_page[pid]))
    recalled = sum(1 for pid, s in spec if any(s[:len(path)] == path for ppid, path in pred if ppid == pid))
    p = good_pred / len(pred) if pred else 0.0
    r = recalled / len(spec) if spec else 0.0
    return PRF(p, r, f1_score(p, r))


def _norm_pair(attribute: str, value: str) -> tuple[str, str]:
    return normalize_space(attribute), normalize_space(value)


def score_extraction(
    predicted: Iterable[Union[AttrValuePair, tuple[str, str, str]]],
    truths: Iterable[GroundTruth],
) -> PRF:
    """Micro-averaged pair P/R/F1; a pair counts only on an exact attribute and value match."""
    pred: dict[str, set] = defaultdict(set)
    for p in predicted:
        pid, a, v = (p.page_id, p.attribute, p.value) if isinstance(p, AttrValuePair) else p
        pred[pid].add(_norm_pair(a, v))
    gold = {g.page_id: {_norm_pair(a, v) for a, v in g.pairs} for g in truths}
    tp = sum(len(pairs & gold.get(pid, set())) for pid, pairs in pred.items())
    return PRF.from_counts(tp, sum(len(v) for v in pred.values()), sum(len(v) for v in gold.values()))


@dataclass
class EvalReport:
    dataset: str
    arrangement: str
    n_pages: int = 0
    classification: Optional[PRF] = None
    extraction: Optional[PRF] = None
    avg_candidate_blocks: float = 0.0
    avg_parse_time_s: float = 0.0
    avg_classification_time_s: float = 0.0
    avg_extraction_time_s: float = 0.0
    total_classification_time_s: float = 0.0
    total_extraction_time_s: float = 0.0
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        d = dict(d)
        for k in ("classification", "extraction"):
            if d.get(k) is not None:
                d[k] = PRF(**d[k])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class PageResult:
    page_id: str
    candidates: list[Candidate]
    pairs: list[AttrValuePair]


@dataclass(frozen=True)
class EndToEndConfig:
    mode: ColumnMode = ColumnMode.TWO_COL
    feedback: bool = True
    blacklist: TagBlacklist = DEFAULT_BLACKLIST


def run_end_to_end(
    entries: Sequence[ManifestEntry],
    models: Models,
    arrangement: Union[Arrangement, str],
    seeds: SeedPool,
    cfg: EndToEndConfig = EndToEndConfig(),
    labels: Optional[Iterable[BlockLabel]] = None,
    truths: Optional[Iterable[GroundTruth]] = None,
    dataset: str = "",
    documents: Optional[dict] = None,
    stages: Optional[Callable[[str], tuple[Optional[Stage], Optional[Stage]]]] = None,
) -> tuple[EvalReport, list[PageResult]]:
    """Classify, extract and score every page in order.

    ``seeds`` is copied, so feedback enrichment never leaks between runs.
    ``documents`` may map page_id to raw HTML to skip disk reads. A page that
    raises is recorded in ``report.failures`` and the run continues.
    ``stages`` maps a page_id to (filter, coarse) stage functions and, when
    given, replaces ``models`` (oracle and scripted classifiers).
    """
    arrangement = Arrangement(arrangement)
    need_filter = arrangement is not Arrangement.COARSE_ONLY
    need_coarse = arrangement is not Arrangement.FILTER_ONLY
    f_stage = c_stage = None
    if stages is None:
        if need_filter and models.svm is None:
            raise ValueError(f"arrangement {arrangement.value} needs a filter model")
        if need_coarse and (models.cnn is None or models.table is None):
            raise ValueError(f"arrangement {arrangement.value} needs a coarse model and embeddings")
        f_stage = filter_stage(models.svm, cfg.blacklist) if need_filter else None
        c_stage = coarse_stage(models.cnn, models.table) if need_coarse else None

    pool = seeds.copy()
    report = EvalReport(dataset=dataset, arrangement=arrangement.value)
    results: list[PageResult] = []
    t_parse = t_cls = t_ext = 0.0
    n_cands = 0
    for entry in entries:
        try:
            t0 = time.perf_counter()
            if stages is not None:
                f_stage, c_stage = stages(entry.page_id)
            if documents is not None and entry.page_id in documents:
                doc = parse_html(documents[entry.page_id], page_id=entry.page_id)
            else:
                doc = load_document(entry)
            t1 = time.perf_counter()
            cands = classify_document(doc.body, arrangement, f_stage, c_stage, cfg.blacklist)
            t2 = time.perf_counter()
            pairs = extract_specifications(cands, pool, cfg.mode, cfg.feedback, entry.page_id, cfg.blacklist)
            t3 = time.perf_counter()
        except Exception as exc:  # keep going; the failure is part of the report
            log.exception("page %s failed", entry.page_id)
            report.failures.append({"page_id": entry.page_id, "error": f"{type(exc).__name__}: {exc}"})
            continue
        t_parse += t1 - t0
        t_cls += t2 - t1
        t_ext += t3 - t2
        n_cands += len(cands)
        results.append(PageResult(entry.page_id, cands, pairs))

    n = len(results)
    report.n_pages = n
    if n:
        report.avg_candidate_blocks = n_cands / n
        report.avg_parse_time_s = t_parse / n
        report.avg_classification_time_s = t_cls / n
        report.avg_extraction_time_s = t_ext / n
    report.total_classification_time_s = t_cls
    report.total_extraction_time_s = t_ext
    done = {r.page_id for r in results}
    if labels is not None:
        page_labels = [lb for lb in labels if lb.page_id in done]
        report.classification = score_classification(((r.page_id, c.path) for r in results for c in r.candidates), page_labels)
    if truths is not None:
        page_truths = [g for g in truths if g.page_id in done]
        report.extraction = score_extraction((p for r in results for p in r.pairs), page_truths)
    return report, results


def format_reports(reports: Sequence[EvalReport]) -> str:
    """Fixed-width text table of the reports."""
    head = f"{'dataset':<14}{'arrangement':<15}{'pages':>6}{'cls P':>8}{'cls R':>8}{'cls F1':>8}{'ext P':>8}{'ext R':>8}{'ext F1':>8}{'#cand':>8}{'t_cls':>8}{'t_ext':>8}"
    lines = [head, "-" * len(head)]

    def f(x: Optional[PRF], attr: str) -> str:
        return f"{getattr(x, attr):>8.3f}" if x is not None else f"{'-':>8}"

    for r in reports:
        lines.append(
            f"{r.dataset[:13]:<14}{r.arrangement:<15}{r.n_pages:>6}"
            f"{f(r.classification, 'precision')}{f(r.classification, 'recall')}{f(r.classification, 'f1')}"
            f"{f(r.extraction, 'precision')}{f(r.extraction, 'recall')}{f(r.extraction, 'f1')}"
            f"{r.avg_candidate_blocks:>8.2f}{r.avg_classification_time_s:>8.3f}{r.avg_extraction_time_s:>8.3f}"
        )
        if r.failures:
            lines.append(f"  {len(r.failures)} page(s) failed")
    return "\n".join(lines)


def save_reports(path: Union[str, Path], reports: Sequence[EvalReport]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def load_reports(path: Union[str, Path]) -> list[EvalReport]:
    with open(path, encoding="utf-8") as fh:
        return [EvalReport.from_dict(json.loads(line)) for line in fh if line.strip()]
