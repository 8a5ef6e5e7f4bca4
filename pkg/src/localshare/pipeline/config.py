"""Run configuration: a JSON document whose every field has a default."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import ConfigError

METHODS = ("hc-dtw", "kshape", "som", "ap-sbd", "dba-gmm")

DISPLAY_NAMES = {
    "hc-dtw": "HC with DynTW",
    "kshape": "k-shape",
    "som": "SOM",
    "ap-sbd": "SBD with AP (+ HC)",
    "dba-gmm": "DBA with GMM",
}


@dataclass
class MethodSpec:
    """One clustering run.

    ``k`` is the target count (hc-dtw, kshape, dba-gmm; for ap-sbd an
    optional second-step target). ``rows``/``cols`` size the SOM grid.
    ``params`` carries method-specific options, e.g. ``linkage``,
    ``cut_height``, ``n_init``, ``epochs``, ``lr0``, ``damping``,
    ``preference``, ``init_k``.
    """

    name: str
    k: int | None = None
    rows: int | None = None
    cols: int | None = None
    normalize: bool = False
    seed: int = 0
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.name not in METHODS:
            raise ConfigError(f"unknown method {self.name!r}; expected one of {METHODS}")
        if self.name == "som":
            if not self.rows or not self.cols or self.rows * self.cols < 2:
                raise ConfigError("som needs rows and cols with rows*cols >= 2")
        elif self.name in ("hc-dtw", "kshape", "dba-gmm"):
            if self.k is None or self.k < 1:
                raise ConfigError(f"{self.name} needs k >= 1")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an explicit integer")

    @property
    def slug(self) -> str:
        if self.name == "som":
            size = f"{self.rows}x{self.cols}"
        elif self.name == "ap-sbd":
            size = f"to{self.k}" if self.k else "auto"
        elif self.name == "dba-gmm" and self.params.get("init_k"):
            size = f"{self.params['init_k']}to{self.k}"
        else:
            size = f"k{self.k}"
        return f"{self.name}_{size}_{'norm' if self.normalize else 'raw'}"


@dataclass
class RunConfig:
    market_files: list[str]
    categories: str | None = None
    segment_files: list[str] = field(default_factory=list)
    delimiter: str = ","
    market_schema: dict | None = None
    segment_schema: dict | None = None
    strict: bool = False
    span: list = field(default_factory=lambda: [[2006, 1], [2024, 3]])
    activity_start: list = field(default_factory=lambda: [2021, 1])
    require_large_hub: bool = True
    min_share_exclusive: float = 0.0
    yearly: bool = True
    drop_partial_final_year: bool = True
    normalize_distances: bool = True
    dtw_window: int | None = None
    methods: list[MethodSpec] = field(default_factory=list)
    highlight: list[str] = field(default_factory=list)
    top_n: int = 5
    out_dir: str = "run"
    base_dir: str = field(default=".", compare=False, repr=False)

    def validate(self) -> None:
        if not self.market_files:
            raise ConfigError("at least one market file is required")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            m.validate()
        if len(self.span) != 2:
            raise ConfigError("span must be [[year, quarter], [year, quarter]]")
        if not 0 <= self.min_share_exclusive < 1:
            raise ConfigError("min_share_exclusive must lie in [0, 1)")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path = ".") -> "RunConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__ if f != "base_dir"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            methods = [MethodSpec(**m) for m in d.pop("methods", [])]
            cfg = cls(**d, methods=methods)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.base_dir = str(base_dir)
        cfg.validate()
        return cfg

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(d, base_dir=path.parent)


def comparison_grid(seed: int = 0) -> list[MethodSpec]:
    """The standard comparison grid: 20 method/parameter rows in reporting order."""
    rows = []
    for k, norm in ((5, False), (5, True), (10, False), (10, True)):
        rows.append(MethodSpec("hc-dtw", k=k, normalize=norm, seed=seed))
    for k, norm in ((5, False), (5, True), (10, False), (10, True)):
        rows.append(MethodSpec("kshape", k=k, normalize=norm, seed=seed))
    for size, norm in ((4, False), (4, True), (10, False), (10, True)):
        rows.append(MethodSpec("som", rows=size, cols=size, normalize=norm, seed=seed))
    for target, norm in ((None, False), (None, True), (10, False), (10, True)):
        rows.append(MethodSpec("ap-sbd", k=target, normalize=norm, seed=seed))
    for init_k, norm in ((None, False), (None, True), (30, False), (30, True)):
        params = {"init_k": init_k} if init_k else {}
        rows.append(MethodSpec("dba-gmm", k=10, normalize=norm, seed=seed, params=params))
    return rows
