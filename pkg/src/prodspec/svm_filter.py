"""Linear SVM used as the cheap first stage of the block classifier.

Trained on the primal hinge loss with Pegasos-style stochastic subgradient
steps (learning rate ``1 / (lambda * t)``), which keeps training
dependency-free and exactly reproducible for a given seed.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateData, FormatError
from .features import FEATURE_NAMES, FeatureStats, FilterFeatures, scale_features
from .labels import Label

FORMAT_NAME = "prodspec-svm"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    epochs: int = 50
    seed: int = 0
    class_weighting: bool = True
    scale: bool = True

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SvmModel:
    weights: np.ndarray
    bias: float
    scaler_stats: Optional[FeatureStats] = None
    threshold: float = 0.0
    config_digest: str = ""
    history: list[float] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(FEATURE_NAMES),):
            raise ValueError(f"expected {len(FEATURE_NAMES)} weights, got shape {self.weights.shape}")
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("SVM parameters must be finite")

    def transform(self, f: FilterFeatures | np.ndarray) -> np.ndarray:
        if self.scaler_stats is None:
            return f.as_array() if isinstance(f, FilterFeatures) else np.asarray(f, dtype=np.float64)
        return scale_features(f, self.scaler_stats)

    def decision(self, f: FilterFeatures | np.ndarray) -> float:
        return float(self.weights @ self.transform(f) + self.bias)


def _objective(w: np.ndarray, x: np.ndarray, y: np.ndarray, cw: np.ndarray, lam: float) -> float:
    margins = y * (x @ w)
    return 0.5 * lam * float(w @ w) + float(np.mean(cw * np.maximum(0.0, 1.0 - margins)))


def train_svm(
    samples: Sequence[tuple[FilterFeatures, int]],
    cfg: SvmConfig = SvmConfig(),
) -> SvmModel:
    """Fit a linear SVM on ``(features, label)`` pairs with labels in {+1, -1}."""
    if cfg.C <= 0:
        raise ValueError("C must be positive")
    y = np.array([int(lbl) for _, lbl in samples], dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    if len(np.unique(y)) < 2:
        raise DegenerateData("training data needs both spec (+1) and non-spec (-1) samples")

    feats = [f for f, _ in samples]
    stats = FeatureStats.fit(feats) if cfg.scale else None
    x = np.stack([f.as_array() for f in feats])
    if stats is not None:
        x = np.stack([scale_features(row, stats) for row in x])
    n = len(y)
    # constant column carries the bias
    x = np.hstack([x, np.ones((n, 1))])

    if cfg.class_weighting:
        n_pos = float(np.sum(y > 0))
        n_neg = n - n_pos
        cw = np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))
    else:
        cw = np.ones(n)

    lam = 1.0 / (cfg.C * n)
    radius = math.sqrt(2.0 * float(cw.max()) / lam)
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(x.shape[1])
    history = [_objective(w, x, y, cw, lam)]
    t = 0
    for _ in range(cfg.epochs):
        avg = np.zeros_like(w)
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            violated = y[i] * (x[i] @ w) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += eta * cw[i] * y[i] * x[i]
            norm = math.sqrt(float(w @ w))
            if norm > radius:
                w *= radius / norm
            avg += w
        # tail averaging over the epoch smooths the last-iterate noise
        w_epoch = avg / n
        history.append(_objective(w_epoch, x, y, cw, lam))
    w = w_epoch if cfg.epochs > 0 else w
    return SvmModel(
        weights=w[:-1].copy(),
        bias=float(w[-1]),
        scaler_stats=stats,
        threshold=0.0,
        config_digest=cfg.digest(),
        history=history,
    )


def predict_svm(model: SvmModel, f: FilterFeatures | np.ndarray) -> tuple[Label, float]:
    margin = model.decision(f)
    return (Label.SPEC if margin > model.threshold else Label.NON_SPEC), margin


def calibrate_threshold(model: SvmModel, positives: Sequence[FilterFeatures], target_recall: float = 1.0) -> SvmModel:
    """Lower (never raise) the decision threshold until ``target_recall`` of ``positives`` pass.

    The filter is the cheap first stage, so a missed spec block costs more
    downstream than an extra candidate does.
    """
    if not 0.0 < target_recall <= 1.0:
        raise ValueError("target_recall must be in (0, 1]")
    if not positives:
        return model
    margins = np.sort([model.decision(f) for f in positives])
    k = int(math.floor((1.0 - target_recall) * len(margins) + 1e-9))
    cut = float(margins[k])
    if cut <= model.threshold:
        model.threshold = float(np.nextafter(cut, -np.inf))
    return model


def save_svm(model: SvmModel, path: str | Path) -> None:
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "feature_names": list(FEATURE_NAMES),
        "weights": [float(v) for v in model.weights],
        "bias": model.bias,
        "threshold": model.threshold,
        "scaler": None if model.scaler_stats is None else {"mean": list(model.scaler_stats.mean), "std": list(model.scaler_stats.std)},
        "config_digest": model.config_digest,
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_svm(path: str | Path) -> SvmModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a valid SVM model file ({exc})") from exc
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_NAME:
        raise FormatError(f"{path}: not a {FORMAT_NAME} file")
    if payload.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {payload.get('version')!r}")
    try:
        scaler = payload["scaler"]
        stats = None if scaler is None else FeatureStats(tuple(scaler["mean"]), tuple(scaler["std"]))
        return SvmModel(
            weights=np.array(payload["weights"], dtype=np.float64),
            bias=float(payload["bias"]),
            scaler_stats=stats,
            threshold=float(payload["threshold"]),
            config_digest=payload.get("config_digest", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed SVM model ({exc})") from exc
