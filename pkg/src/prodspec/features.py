"""Markup-agnostic block features for the linear filter model."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields
from typing import Sequence

import numpy as np

from .dom import DEFAULT_BLACKLIST, DomNode, NodeKind, TagBlacklist

FEATURE_NAMES = ("n_text_fields", "total_text_len", "alnum_ratio", "n_images", "n_links", "upper_ratio")


@dataclass(frozen=True)
class FilterFeatures:
    n_text_fields: int = 0
    total_text_len: int = 0
    alnum_ratio: float = 0.0
    n_images: int = 0
    n_links: int = 0
    upper_ratio: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


assert tuple(f.name for f in fields(FilterFeatures)) == FEATURE_NAMES


def compute_filter_features(block: DomNode, blacklist: TagBlacklist = DEFAULT_BLACKLIST) -> FilterFeatures:
    n_fields = total = alnum = upper = images = links = 0
    stack = [block]
    while stack:
        n = stack.pop()
        if n.kind is NodeKind.TEXT:
            s = n.norm_text
            if s:
                n_fields += 1
                total += len(s)
                for ch in s:
                    if ch.isalpha() or ch.isdigit():
                        alnum += 1
                        if ch.isupper():
                            upper += 1
            continue
        if n.tag in blacklist:
            continue
        if n is not block:
            if n.tag == "img":
                images += 1
            elif n.tag == "a" and n.attrs.get("href", "").strip():
                links += 1
        stack.extend(n.children)
    if total == 0:
        return FilterFeatures(n_fields, 0, 0.0, images, links, 0.0)
    return FilterFeatures(n_fields, total, alnum / total, images, links, upper / total)


@dataclass(frozen=True)
class FeatureStats:
    mean: tuple[float, ...]
    std: tuple[float, ...]

    @classmethod
    def fit(cls, samples: Sequence[FilterFeatures]) -> "FeatureStats":
        x = np.stack([s.as_array() for s in samples])
        return cls(tuple(float(v) for v in x.mean(axis=0)), tuple(float(v) for v in x.std(axis=0)))


def scale_features(f: FilterFeatures | np.ndarray, stats: FeatureStats) -> np.ndarray:
    """Z-score each component; zero-variance components map to 0."""
    x = f.as_array() if isinstance(f, FilterFeatures) else np.asarray(f, dtype=np.float64)
    mean = np.asarray(stats.mean)
    std = np.asarray(stats.std)
    safe = np.where(std > 0, std, 1.0)
    return np.where(std > 0, (x - mean) / safe, 0.0)


def unscale_features(z: np.ndarray, stats: FeatureStats) -> np.ndarray:
    mean = np.asarray(stats.mean)
    std = np.asarray(stats.std)
    return np.where(std > 0, z * std + mean, mean)
