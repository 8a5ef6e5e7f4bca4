from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; identical streams for identical seeds."""
    return np.random.Generator(np.random.Philox(int(seed)))


def relabel_by_appearance(labels) -> np.ndarray:
    """Renumber labels 0..k-1 in order of first appearance."""
    labels = np.asarray(labels)
    mapping: dict = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        out[i] = mapping.setdefault(lab, len(mapping))
    return out


@dataclass(eq=False)
class ClusteringResult:
    method: str
    labels: np.ndarray
    k_requested: int
    params: dict = field(default_factory=dict)
    centroids: np.ndarray | None = None
    soft: np.ndarray | None = None
    seed: int | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k_requested):
            raise ValueError(f"labels must lie in [0, {self.k_requested})")
        if self.soft is not None:
            self.soft = np.asarray(self.soft, dtype=float)
            if self.soft.shape != (len(self.labels), self.k_requested):
                raise ValueError("soft responsibilities must be n x k_requested")
            if np.any(np.abs(self.soft.sum(axis=1) - 1.0) > 1e-12):
                raise ValueError("responsibility rows must sum to 1")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def k_actual(self) -> int:
        return int(np.unique(self.labels).size)

    def sizes(self) -> list[int]:
        """Sizes of the non-empty clusters, ordered by label id."""
        counts = np.bincount(self.labels, minlength=self.k_requested)
        return [int(c) for c in counts if c > 0]

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def to_document(self, keys=None) -> dict:
        keys = [str(k) for k in (keys if keys is not None else range(self.n))]
        doc = {
            "method": self.method,
            "parameters": _jsonable(self.params),
            "seed": self.seed,
            "k_requested": int(self.k_requested),
            "k_actual": self.k_actual,
            "labels": {k: int(lab) for k, lab in zip(keys, self.labels)},
        }
        if self.centroids is not None:
            doc["centroids"] = _round_floats(np.asarray(self.centroids).tolist())
        if self.soft is not None:
            doc["responsibilities"] = {k: _round_floats(row) for k, row in zip(keys, self.soft.tolist())}
        if self.extras:
            doc["extras"] = _jsonable(self.extras)
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> tuple["ClusteringResult", list[str]]:
        keys = list(doc["labels"])
        soft = None
        if "responsibilities" in doc:
            soft = np.array([doc["responsibilities"][k] for k in keys])
            soft = soft / soft.sum(axis=1, keepdims=True)
        res = cls(
            method=doc["method"],
            labels=np.array([doc["labels"][k] for k in keys]),
            k_requested=doc["k_requested"],
            params=doc.get("parameters", {}),
            centroids=np.array(doc["centroids"]) if "centroids" in doc else None,
            soft=soft,
            seed=doc.get("seed"),
            extras=doc.get("extras", {}),
        )
        return res, keys


def _round_floats(obj, digits: int = 12):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, list):
        return [_round_floats(o, digits) for o in obj]
    return obj


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
