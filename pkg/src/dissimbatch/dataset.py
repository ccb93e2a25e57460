"""Random datasets: continuous part, categorical part and corruption flag.

Points are stored columnar. A corrupted point keeps its category but its
continuous part is NaN, so distance code can never read it.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from . import rng

P0_MEANS = ("prob_corrupted", "prob_uncorrupted")


class CsvFormatError(ValueError):
    """Base class for dataset CSV errors; ``row`` is the 1-based file line."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class MalformedRowError(CsvFormatError):
    pass


class DimensionMismatchError(CsvFormatError):
    pass


class CategoryRangeError(CsvFormatError):
    pass


@dataclass(frozen=True)
class DensitySpec:
    """Density of the continuous part on the unit cube.

    ``two-level`` puts mass ``hot_mass`` uniformly on the hot square
    ``[corner, corner + side]^d`` and spreads the rest uniformly on the
    remainder of the cube.
    """

    kind: str = "uniform-unit-cube"
    corner: float = 0.0
    side: float = 1.0
    hot_mass: float = 1.0

    def validate(self, d: int) -> None:
        if self.kind == "uniform-unit-cube":
            return
        if self.kind != "two-level":
            raise ValueError(f"unknown density kind {self.kind!r}")
        if not (0 < self.side < 1):
            raise ValueError("two-level density needs 0 < side < 1")
        if self.corner < 0 or self.corner + self.side > 1:
            raise ValueError("hot square must lie inside the unit cube")
        if not (0 < self.hot_mass < 1):
            raise ValueError("two-level density needs 0 < hot_mass < 1")
        if not math.isclose(self.total_mass(d), 1.0, rel_tol=1e-12):
            raise ValueError("density does not integrate to 1")

    def _levels(self, d: int) -> tuple[float, float]:
        if self.kind == "uniform-unit-cube":
            return 1.0, 1.0
        vol = self.side**d
        return self.hot_mass / vol, (1.0 - self.hot_mass) / (1.0 - vol)

    def total_mass(self, d: int) -> float:
        inside, outside = self._levels(d)
        if self.kind == "uniform-unit-cube":
            return inside
        vol = self.side**d
        return inside * vol + outside * (1.0 - vol)

    def eps_low(self, d: int) -> float:
        """Density lower bound on the hot square (the whole cube for uniform)."""
        return self._levels(d)[0]

    def eps_up(self, d: int) -> float:
        return max(self._levels(d))

    def hot_square(self, d: int) -> tuple[np.ndarray, float]:
        if self.kind == "uniform-unit-cube":
            return np.zeros(d), 1.0
        return np.full(d, self.corner), self.side

    def sample(self, seed: int, index: np.ndarray, d: int) -> np.ndarray:
        index = np.asarray(index, dtype=np.uint64)
        cols = [rng.uniform(seed, rng.X_STREAM, index, j) for j in range(d)]
        x = np.stack(cols, axis=1) if d else np.empty((len(index), 0))
        if self.kind == "uniform-unit-cube":
            return x
        lo = self.corner
        hi = self.corner + self.side
        hot = rng.uniform(seed, rng.REGION_STREAM, index) < self.hot_mass
        x[hot] = lo + self.side * x[hot]
        # rejection from the cube minus the hot square; slots are per point
        pending = np.flatnonzero(~hot)
        attempt = 1
        while pending.size:
            if (attempt + 1) * d > rng.MAX_SLOTS:
                raise RuntimeError("rejection sampler ran out of slots")
            sub = index[pending]
            cand = np.stack(
                [rng.uniform(seed, rng.X_STREAM, sub, attempt * d + j) for j in range(d)], axis=1
            )
            inside = np.all((cand >= lo) & (cand < hi), axis=1)
            ok = ~inside
            x[pending[ok]] = cand[ok]
            pending = pending[inside]
            attempt += 1
        return x


@dataclass(frozen=True)
class CategoricalSpec:
    """Law of the categorical part over symbols ``0..cat_size-1``.

    ``two-level`` puts ``p_top`` on symbol 0 and splits the rest evenly;
    ``power-law`` uses weights ``(y + 1) ** -exponent``.
    """

    kind: str = "uniform"
    cat_size: int = 1
    p_top: float = 1.0
    exponent: float = 1.0

    def probs(self) -> np.ndarray:
        m = self.cat_size
        if m < 1:
            raise ValueError("cat_size must be >= 1")
        if self.kind == "uniform":
            p = np.full(m, 1.0 / m)
        elif self.kind == "two-level":
            if m == 1:
                p = np.ones(1)
            else:
                if not (1.0 / m <= self.p_top < 1.0):
                    raise ValueError("two-level categorical needs 1/cat_size <= p_top < 1")
                p = np.full(m, (1.0 - self.p_top) / (m - 1))
                p[0] = self.p_top
        elif self.kind == "power-law":
            w = np.arange(1, m + 1, dtype=float) ** -self.exponent
            p = w / w.sum()
        else:
            raise ValueError(f"unknown categorical kind {self.kind!r}")
        if abs(p.sum() - 1.0) > 1e-12 or p.min() <= 0:
            raise ValueError("categorical law is not a positive probability vector")
        return p

    @property
    def p_up(self) -> float:
        return float(self.probs().max())

    @property
    def p_low(self) -> float:
        return float(self.probs().min())

    def sample(self, seed: int, index: np.ndarray) -> np.ndarray:
        cdf = np.cumsum(self.probs())
        u = rng.uniform(seed, rng.Y_STREAM, index)
        return np.minimum(np.searchsorted(cdf, u, side="right"), self.cat_size - 1).astype(np.int64)


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    d: int
    r_n: float = 0.1
    p0: float = 0.0
    density: DensitySpec = field(default_factory=DensitySpec)
    categorical: CategoricalSpec = field(default_factory=CategoricalSpec)
    seed: int = 0
    # p0 is the corruption probability unless p0_means == "prob_uncorrupted"
    p0_means: str = "prob_corrupted"

    def validate(self) -> None:
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if self.r_n < 0:
            raise ValueError("r_n must be non-negative")
        if not (0.0 <= self.p0 <= 1.0):
            raise ValueError("p0 must lie in [0, 1]")
        if self.p0_means not in P0_MEANS:
            raise ValueError(f"p0_means must be one of {P0_MEANS}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.density.validate(self.d)
        self.categorical.probs()

    @property
    def corruption_prob(self) -> float:
        return self.p0 if self.p0_means == "prob_corrupted" else 1.0 - self.p0


@dataclass(frozen=True)
class DataPoint:
    index: int
    x: Optional[tuple]
    y: int
    corrupted: bool


class Dataset:
    """Immutable columnar dataset. ``x`` rows of corrupted points are NaN."""

    def __init__(self, x, y, corrupted, cat_size=None, config=None):
        x = np.array(x, dtype=np.float64)
        y = np.array(y, dtype=np.int64)
        corrupted = np.array(corrupted, dtype=bool)
        if x.ndim != 2 or y.ndim != 1 or corrupted.ndim != 1:
            raise ValueError("x must be (n, d); y and corrupted must be (n,)")
        n = len(y)
        if n == 0:
            raise ValueError("a dataset needs at least one point")
        if x.shape[0] != n or corrupted.shape[0] != n:
            raise ValueError("x, y and corrupted disagree on n")
        if y.min() < 0:
            raise ValueError("category ids must be non-negative")
        if cat_size is None:
            cat_size = int(y.max()) + 1
        if y.max() >= cat_size:
            raise ValueError("category id out of range")
        x[corrupted] = np.nan
        if np.isnan(x[~corrupted]).any():
            raise ValueError("uncorrupted point with missing coordinates")
        for a in (x, y, corrupted):
            a.setflags(write=False)
        self.x = x
        self.y = y
        self.corrupted = corrupted
        self.cat_size = int(cat_size)
        self.config = config

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return self.n

    def point(self, i: int) -> DataPoint:
        c = bool(self.corrupted[i])
        return DataPoint(int(i), None if c else tuple(float(v) for v in self.x[i]), int(self.y[i]), c)

    def __iter__(self) -> Iterator[DataPoint]:
        return (self.point(i) for i in range(self.n))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.x.shape == other.x.shape
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.corrupted, other.corrupted)
            and np.array_equal(self.x, other.x, equal_nan=True)
        )

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, d={self.d}, cat_size={self.cat_size}, corrupted={int(self.corrupted.sum())})"

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.x[idx], self.y[idx], self.corrupted[idx], self.cat_size)


def generate(cfg: GeneratorConfig) -> Dataset:
    cfg.validate()
    index = np.arange(cfg.n, dtype=np.uint64)
    # x is drawn for every point, corrupted or not, so draws never depend on delta
    x = cfg.density.sample(cfg.seed, index, cfg.d)
    y = cfg.categorical.sample(cfg.seed, index)
    corrupted = rng.uniform(cfg.seed, rng.DELTA_STREAM, index) < cfg.corruption_prob
    return Dataset(x, y, corrupted, cfg.categorical.cat_size, cfg)


@dataclass(frozen=True)
class DatasetSummary:
    n: int
    d: int
    frac_corrupted: float
    p_up: float
    p_low: float
    histogram: tuple


def summary(ds: Dataset) -> DatasetSummary:
    hist = np.bincount(ds.y, minlength=ds.cat_size)
    freq = hist / ds.n
    return DatasetSummary(
        n=ds.n,
        d=ds.d,
        frac_corrupted=float(ds.corrupted.mean()),
        p_up=float(freq.max()),
        p_low=float(freq.min()),
        histogram=tuple(int(h) for h in hist),
    )


# ---------------------------------------------------------------- CSV

def save_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["idx", "corrupted", "y"] + [f"x{j}" for j in range(ds.d)])
        for i in range(ds.n):
            if ds.corrupted[i]:
                xs = [""] * ds.d
            else:
                xs = [repr(float(v)) for v in ds.x[i]]
            w.writerow([i, int(ds.corrupted[i]), int(ds.y[i])] + xs)


def load_csv(path, cat_size: Optional[int] = None) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MalformedRowError(1, "empty file")
    header = rows[0]
    if header[:3] != ["idx", "corrupted", "y"] or header[3:] != [f"x{j}" for j in range(len(header) - 3)]:
        raise MalformedRowError(1, f"bad header {header!r}")
    d = len(header) - 3
    if d < 1:
        raise MalformedRowError(1, "header has no coordinate columns")
    n = len(rows) - 1
    x = np.full((n, d), np.nan)
    y = np.empty(n, dtype=np.int64)
    corrupted = np.empty(n, dtype=bool)
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != d + 3:
            raise DimensionMismatchError(line, f"expected {d} coordinates, got {len(row) - 3}")
        try:
            idx = int(row[0])
            flag = int(row[1])
            cat = int(row[2])
        except ValueError as exc:
            raise MalformedRowError(line, str(exc)) from None
        if idx != i:
            raise MalformedRowError(line, f"expected idx {i}, got {idx}")
        if flag not in (0, 1):
            raise MalformedRowError(line, "corrupted must be 0 or 1")
        if cat < 0 or (cat_size is not None and cat >= cat_size):
            raise CategoryRangeError(line, f"category {cat} out of range")
        corrupted[i] = bool(flag)
        y[i] = cat
        cells = row[3:]
        if flag:
            if any(c.strip() for c in cells):
                raise MalformedRowError(line, "corrupted row must leave coordinates empty")
        else:
            try:
                x[i] = [float(c) for c in cells]
            except ValueError as exc:
                raise MalformedRowError(line, str(exc)) from None
            if not np.isfinite(x[i]).all():
                raise MalformedRowError(line, "non-finite coordinate")
    if n == 0:
        raise MalformedRowError(1, "no data rows")
    return Dataset(x, y, corrupted, cat_size)


# ---------------------------------------------------------------- config files

def load_config(path) -> GeneratorConfig:
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    return config_from_parser(cp)


def config_from_parser(cp: configparser.ConfigParser) -> GeneratorConfig:
    m = cp["model"] if cp.has_section("model") else {}
    dens = cp["density"] if cp.has_section("density") else {}
    cat = cp["categorical"] if cp.has_section("categorical") else {}
    rs = cp["rng"] if cp.has_section("rng") else {}
    try:
        cfg = GeneratorConfig(
            n=int(m.get("n", 100)),
            d=int(m.get("d", 2)),
            r_n=float(m.get("r_n", 0.1)),
            p0=float(m.get("p0", 0.0)),
            p0_means=m.get("p0_means", "prob_corrupted"),
            density=DensitySpec(
                kind=dens.get("kind", "uniform-unit-cube"),
                corner=float(dens.get("corner", 0.0)),
                side=float(dens.get("side", 1.0)),
                hot_mass=float(dens.get("hot_mass", 1.0)),
            ),
            categorical=CategoricalSpec(
                kind=cat.get("kind", "uniform"),
                cat_size=int(cat.get("cat_size", 1)),
                p_top=float(cat.get("p_top", 1.0)),
                exponent=float(cat.get("exponent", 1.0)),
            ),
            seed=int(rs.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad config value: {exc}") from None
    cfg.validate()
    return cfg


def save_config(cfg: GeneratorConfig, path) -> None:
    cp = configparser.ConfigParser()
    cp["model"] = {"n": cfg.n, "d": cfg.d, "r_n": repr(cfg.r_n), "p0": repr(cfg.p0), "p0_means": cfg.p0_means}
    cp["density"] = {
        "kind": cfg.density.kind,
        "corner": repr(cfg.density.corner),
        "side": repr(cfg.density.side),
        "hot_mass": repr(cfg.density.hot_mass),
    }
    cp["categorical"] = {
        "kind": cfg.categorical.kind,
        "cat_size": cfg.categorical.cat_size,
        "p_top": repr(cfg.categorical.p_top),
        "exponent": repr(cfg.categorical.exponent),
    }
    cp["rng"] = {"seed": cfg.seed}
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)


def with_seed(cfg: GeneratorConfig, seed: int) -> GeneratorConfig:
    return replace(cfg, seed=seed)
