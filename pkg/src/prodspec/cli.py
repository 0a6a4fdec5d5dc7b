"""Command-line entry point: corpus generation, training, classification, extraction, evaluation.

Settings come from built-in defaults, then an optional ``--config`` file
(YAML or JSON), then command-line flags.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import yaml

from .classify import Arrangement, classify_document, coarse_stage, filter_stage
from .cnn_coarse import TrainConfig, load_cnn, save_cnn
from .dataset import (
    ManifestEntry,
    SyntheticConfig,
    generate_synthetic_corpus,
    load_document,
    load_ground_truth,
    load_labels,
    load_manifest,
    write_jsonl,
)
from .dom import DEFAULT_BLACKLIST, TagBlacklist
from .errors import ProdspecError
from .evaluate import EndToEndConfig, format_reports, run_end_to_end
from .extract import ColumnMode, SeedPool, extract_specifications
from .labels import Label
from .pipeline import Models, collect_samples, fit_coarse, fit_embeddings, fit_filter
from .svm_filter import SvmConfig, load_svm, save_svm
from .token_embed import EmbeddingConfig, load_embeddings, save_embeddings

log = logging.getLogger("prodspec")

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "skip_top": 3,
    "arrangement": "filter+coarse",
    "blacklist": sorted(DEFAULT_BLACKLIST.tags),
    "data": {"manifest": None, "labels": None, "truth": None},
    "models": {"svm": None, "embeddings": None, "cnn": None},
    "corpus": {"n_pages": 100, "tag_vocab": "mixed", "rows_per_block": [3, 20], "decoys": [0, 5]},
    "svm": {"C": 1.0, "epochs": 50, "target_recall": 1.0},
    "embeddings": {"dim": 100, "window": 5, "negatives": 5, "epochs": 5, "lr": 0.025, "min_count": 1, "splits": ["train", "holdout"]},
    "cnn": {"lr": 1e-5, "l2": 1e-6, "batch_size": 2, "epochs": 10},
    "extraction": {"mode": "two-col", "feedback": True, "seeds_file": None},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in out:
            raise ProdspecError(f"unknown config key {k!r}")
        if isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: Optional[str]) -> dict:
    if not path:
        return copy.deepcopy(DEFAULTS)
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ProdspecError(f"{path}: config must be a mapping")
    return _merge(DEFAULTS, data)


def apply_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.skip_top is not None:
        cfg["skip_top"] = args.skip_top
    if args.arrangement is not None:
        cfg["arrangement"] = args.arrangement
    if args.mode is not None:
        cfg["extraction"]["mode"] = args.mode
    if args.feedback is not None:
        cfg["extraction"]["feedback"] = args.feedback == "on"
    if args.seeds_file is not None:
        cfg["extraction"]["seeds_file"] = args.seeds_file
    for key in ("manifest", "labels", "truth"):
        if getattr(args, key, None):
            cfg["data"][key] = getattr(args, key)
    for key in ("svm", "embeddings", "cnn"):
        if getattr(args, f"{key}_path", None):
            cfg["models"][key] = getattr(args, f"{key}_path")
    for name in ("n_pages", "tag_vocab"):
        if getattr(args, name, None) is not None:
            cfg["corpus"][name] = getattr(args, name)
    if getattr(args, "epochs", None) is not None:
        cfg[args.command.split("-", 1)[1]]["epochs"] = args.epochs
    if getattr(args, "lr", None) is not None:
        cfg[args.command.split("-", 1)[1]]["lr"] = args.lr
    return cfg


def _build(cls, section: dict, **extra):
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {k: v for k, v in section.items() if k in names}
    kwargs.update(extra)
    return cls(**kwargs)


def _require(cfg: dict, section: str, key: str) -> str:
    value = cfg[section][key]
    if not value:
        raise ProdspecError(f"missing {section}.{key} (set it in the config or pass --{key.replace('_', '-')})")
    return value


def _blacklist(cfg: dict) -> TagBlacklist:
    return TagBlacklist(frozenset(cfg["blacklist"]))


def _seed_pool(cfg: dict) -> SeedPool:
    path = cfg["extraction"]["seeds_file"]
    return SeedPool.load(path) if path else SeedPool.default()


def _entries(cfg: dict, args: argparse.Namespace) -> list[ManifestEntry]:
    if getattr(args, "html", None):
        return [ManifestEntry(Path(p).stem, Path(p), "holdout", "cli", "") for p in args.html]
    return load_manifest(_require(cfg, "data", "manifest"))


def _load_models(cfg: dict, arrangement: Arrangement) -> Models:
    m = Models()
    if arrangement is not Arrangement.COARSE_ONLY:
        m.svm = load_svm(_require(cfg, "models", "svm"))
    if arrangement is not Arrangement.FILTER_ONLY:
        m.table = load_embeddings(_require(cfg, "models", "embeddings"))
        m.cnn = load_cnn(_require(cfg, "models", "cnn"))
    return m


class _Output:
    """Records go to ``--out`` or stdout; the table goes to stdout, or stderr when stdout carries records."""

    def __init__(self, out: Optional[str]):
        self.out = out

    def records(self, recs: list[dict]) -> None:
        if self.out:
            write_jsonl(self.out, recs)
        else:
            for r in recs:
                sys.stdout.write(json.dumps(r, sort_keys=True) + "\n")

    def table(self, text: str) -> None:
        stream = sys.stdout if self.out else sys.stderr
        stream.write(text + "\n")


def _training_samples(cfg: dict, splits: Sequence[str]):
    entries = load_manifest(_require(cfg, "data", "manifest"))
    labels = load_labels(_require(cfg, "data", "labels"))
    return entries, labels, collect_samples(entries, labels, splits, cfg["skip_top"], blacklist=_blacklist(cfg))


def _class_counts(samples) -> str:
    n_spec = sum(1 for s in samples if s.label is Label.SPEC)
    return f"{len(samples)} blocks ({n_spec} spec, {len(samples) - n_spec} non-spec)"


def cmd_gen_corpus(cfg: dict, args: argparse.Namespace, out: _Output) -> None:
    c = cfg["corpus"]
    scfg = SyntheticConfig(
        n_pages=int(c["n_pages"]),
        tag_vocab=c["tag_vocab"],
        rows_per_block=tuple(c["rows_per_block"]),
        decoys=tuple(c["decoys"]),
        seed=cfg["seed"],
        skip_top=cfg["skip_top"],
    )
    corpus = generate_synthetic_corpus(scfg)
    if not args.out:
        raise ProdspecError("gen-corpus needs --out DIR")
    paths = corpus.write(args.out)
    n_neg = sum(1 for lb in corpus.labels if lb.label is Label.NON_SPEC)
    rec = {"pages": len(corpus.pages), "spec_blocks": len(corpus.labels) - n_neg, "non_spec_blocks": n_neg, **{k: str(v) for k, v in paths.items()}}
    sys.stdout.write(json.dumps(rec, sort_keys=True) + "\n")


def cmd_train_filter(cfg: dict, args: argparse.Namespace, out: _Output) -> None:
    _, _, pool = _training_samples(cfg, ["train", "validation"])
    samples = [s for s in pool if s.split == "train"]
    # the threshold is lowered until every known spec block passes; holdout stays unseen
    model = fit_filter(samples, _build(SvmConfig, cfg["svm"], seed=cfg["seed"]), pool, cfg["svm"]["target_recall"])
    dest = args.out or _require(cfg, "models", "svm")
    save_svm(model, dest)
    print(f"filter model trained on {_class_counts(samples)} -> {dest}")


def cmd_train_embeddings(cfg: dict, args: argparse.Namespace, out: _Output) -> None:
    _, _, samples = _training_samples(cfg, cfg["embeddings"]["splits"])
    table = fit_embeddings(samples, _build(EmbeddingConfig, cfg["embeddings"], seed=cfg["seed"]))
    dest = args.out or _require(cfg, "models", "embeddings")
    save_embeddings(table, dest)
    print(f"embeddings: {len(table)} tokens x {table.dim} -> {dest}")


def cmd_train_coarse(cfg: dict, args: argparse.Namespace, out: _Output) -> None:
    entries, labels, train = _training_samples(cfg, ["train"])
    val = collect_samples(entries, labels, ["validation"], cfg["skip_top"], blacklist=_blacklist(cfg))
    table = load_embeddings(_require(cfg, "models", "embeddings"))
    result = fit_coarse(train, table, _build(TrainConfig, cfg["cnn"], seed=cfg["seed"]), val or None)
    dest = args.out or _require(cfg, "models", "cnn")
    save_cnn(result.model, dest)
    print(f"coarse model trained on {_class_counts(train)}, best epoch {result.best_epoch + 1} -> {dest}")


def cmd_classify(cfg: dict, args: argparse.Namespace, out: _Output) -> None:
    arrangement = Arrangement(cfg["arrangement"])
    models = _load_models(cfg, arrangement)
    bl = _blacklist(cfg)
    f = filter_stage(models.svm, bl) if models.svm else None
    c = coarse_stage(models.cnn, models.table) if models.cnn else None
    recs = []
    for e in _entries(cfg, args):
        doc = load_document(e)
        for cand in classify_document(doc.body, arrangement, f, c, bl):
            recs.append({"page_id": e.page_id, "path": list(cand.path), "tag": cand.tag, "filter_margin": cand.filter_margin, "coarse_score": cand.coarse_score})
    out.records(recs)
    out.table(f"{len(recs)} candidate block(s) [{arrangement.value}]")


def cmd_extract(cfg: dict, args: argparse.Namespace, out: _Output) -> None:
    arrangement = Arrangement(cfg["arrangement"])
    models = _load_models(cfg, arrangement)
    e2e = EndToEndConfig(ColumnMode(cfg["extraction"]["mode"]), bool(cfg["extraction"]["feedback"]), _blacklist(cfg))
    report, results = run_end_to_end(_entries(cfg, args), models, arrangement, _seed_pool(cfg), e2e)
    recs = [{"page_id": p.page_id, "attribute": p.attribute, "value": p.value, "block_path": list(p.block_path)} for r in results for p in r.pairs]
    out.records(recs)
    out.table(f"{len(recs)} pair(s) from {report.n_pages} page(s), {len(report.failures)} failure(s)")
    if report.failures:
        raise ProdspecError(f"{len(report.failures)} page(s) failed")


def cmd_eval(cfg: dict, args: argparse.Namespace, out: _Output) -> None:
    entries = load_manifest(_require(cfg, "data", "manifest"))
    if args.split != "all":
        entries = [e for e in entries if e.split == args.split]
    labels = load_labels(_require(cfg, "data", "labels"))
    truths = load_ground_truth(_require(cfg, "data", "truth"))
    arrangements = list(Arrangement) if cfg["arrangement"] == "all" else [Arrangement(cfg["arrangement"])]
    e2e = EndToEndConfig(ColumnMode(cfg["extraction"]["mode"]), bool(cfg["extraction"]["feedback"]), _blacklist(cfg))
    pool = _seed_pool(cfg)
    dataset = Path(cfg["data"]["manifest"]).parent.name or "corpus"
    reports = []
    for arr in arrangements:
        report, _ = run_end_to_end(entries, _load_models(cfg, arr), arr, pool, e2e, labels, truths, dataset)
        reports.append(report)
    out.records([r.to_dict() for r in reports])
    out.table(format_reports(reports))


COMMANDS = {
    "gen-corpus": cmd_gen_corpus,
    "train-filter": cmd_train_filter,
    "train-embeddings": cmd_train_embeddings,
    "train-coarse": cmd_train_coarse,
    "classify": cmd_classify,
    "extract": cmd_extract,
    "eval": cmd_eval,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON settings file")
    common.add_argument("--seed", type=int)
    common.add_argument("--skip-top", type=int, dest="skip_top")
    common.add_argument("--arrangement", choices=[a.value for a in Arrangement] + ["all"])
    common.add_argument("--mode", choices=[m.value for m in ColumnMode])
    common.add_argument("--feedback", choices=["on", "off"])
    common.add_argument("--seeds-file", dest="seeds_file")
    common.add_argument("--manifest")
    common.add_argument("--labels")
    common.add_argument("--truth")
    common.add_argument("--svm", dest="svm_path")
    common.add_argument("--embeddings", dest="embeddings_path")
    common.add_argument("--cnn", dest="cnn_path")
    common.add_argument("--out", help="output file (directory for gen-corpus)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="prodspec", description="Find product specification blocks and extract attribute-value pairs.")
    sub = parser.add_subparsers(dest="command", required=True)
    gen = sub.add_parser("gen-corpus", parents=[common], help="write a seeded synthetic corpus")
    gen.add_argument("--n-pages", type=int, dest="n_pages")
    gen.add_argument("--vocab", dest="tag_vocab")
    sub.add_parser("train-filter", parents=[common], help="train the linear filter")
    emb = sub.add_parser("train-embeddings", parents=[common], help="train token embeddings")
    emb.add_argument("--epochs", type=int)
    emb.add_argument("--lr", type=float)
    coarse = sub.add_parser("train-coarse", parents=[common], help="train the coarse CNN")
    coarse.add_argument("--epochs", type=int)
    coarse.add_argument("--lr", type=float)
    cls = sub.add_parser("classify", parents=[common], help="list candidate specification blocks")
    cls.add_argument("html", nargs="*", help="HTML files (default: the manifest)")
    ext = sub.add_parser("extract", parents=[common], help="extract attribute-value pairs")
    ext.add_argument("html", nargs="*", help="HTML files (default: the manifest)")
    ev = sub.add_parser("eval", parents=[common], help="score one or all arrangements")
    ev.add_argument("--split", default="holdout", choices=["train", "validation", "holdout", "all"])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), args)
        COMMANDS[args.command](cfg, args, _Output(args.out if args.command != "gen-corpus" else None))
    except (ProdspecError, OSError, ValueError, yaml.YAMLError) as exc:
        print(f"prodspec {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
