"""Opinion transformations f: [0,1] -> [0,1] and bias statistics.

Three representations: the identity, a validated affine map, and a
Nadaraya-Watson kernel regressor fitted to observed (original,
rewritten) opinion pairs. All of them are immutable and vectorized.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import IO, Iterable, Union

import numpy as np

from .errors import ParseError, ValidityError

# Query block size for kernel prediction; bounds the weight-matrix memory.
_NW_CHUNK = 8192

# Default bandwidth grid for cross-validated fits.
BANDWIDTH_GRID_SIZE = 20
BANDWIDTH_GRID_RANGE = (0.01, 0.5)

_STANCES = ("favor", "against")


def _check_domain(x: np.ndarray) -> None:
    if x.size and ((x < 0.0) | (x > 1.0)).any():
        bad = x[(x < 0.0) | (x > 1.0)][0]
        raise ValidityError(f"opinion {bad!r} outside [0, 1]")


def _as_query(x) -> tuple[np.ndarray, bool]:
    q = np.asarray(x, dtype=float)
    scalar = q.ndim == 0
    return np.atleast_1d(q), scalar


@dataclass(frozen=True)
class IdentityTransform:
    """f(x) = x; the unmediated channel."""

    def apply(self, x):
        q, scalar = _as_query(x)
        _check_domain(q)
        return float(q[0]) if scalar else q.copy()

    def to_dict(self) -> dict:
        return {"kind": "identity"}


@dataclass(frozen=True)
class LinearTransform:
    """f(x) = slope * x + intercept, constrained to map [0,1] into itself.

    The neutral point is the unique fixed point intercept / (1 - slope);
    opinions on either side of it are pulled toward it by factor slope.
    Use make_linear to construct with validation.
    """

    slope: float
    intercept: float
    neutral_point: float

    def apply(self, x):
        q, scalar = _as_query(x)
        _check_domain(q)
        out = self.slope * q + self.intercept
        return float(out[0]) if scalar else out

    def to_dict(self) -> dict:
        return {
            "kind": "linear",
            "m": self.slope,
            "b": self.intercept,
            "neutral_point": self.neutral_point,
        }


@dataclass(frozen=True, eq=False)
class KernelTransform:
    """Nadaraya-Watson regressor over fitted (x, y) support points.

    Predictions are convex combinations of the y values, so the range
    stays inside [min y, max y] and therefore inside [0, 1].
    """

    xs: np.ndarray
    ys: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if self.xs.ndim != 1 or self.ys.ndim != 1 or self.xs.size != self.ys.size:
            raise ValidityError("kernel support xs and ys must be equal-length vectors")
        if self.xs.size == 0:
            raise ValidityError("kernel transform needs at least one support point")
        if not self.bandwidth > 0:
            raise ValidityError(f"bandwidth must be positive, got {self.bandwidth!r}")
        _check_domain(self.xs)
        _check_domain(self.ys)

    def apply(self, x):
        q, scalar = _as_query(x)
        _check_domain(q)
        out = nw_predict(self.xs, self.ys, self.bandwidth, q)
        return float(out[0]) if scalar else out

    def to_dict(self) -> dict:
        return {
            "kind": "kernel",
            "x": [float(v) for v in self.xs],
            "y": [float(v) for v in self.ys],
            "bandwidth": self.bandwidth,
        }


Transformation = Union[IdentityTransform, LinearTransform, KernelTransform]


def make_linear(m: float, b: float) -> LinearTransform:
    """Validated affine transform; errors name the violated condition."""
    if not 0.0 < m < 1.0:
        raise ValidityError(f"slope m must lie in the open interval (0, 1), got {m!r}")
    if not 0.0 <= b <= 1.0:
        raise ValidityError(f"intercept b must lie in [0, 1], got {b!r}")
    if m + b > 1.0:
        raise ValidityError(f"m + b must not exceed 1, got {m!r} + {b!r} = {m + b!r}")
    return LinearTransform(slope=float(m), intercept=float(b), neutral_point=b / (1.0 - m))


def nw_predict(xs: np.ndarray, ys: np.ndarray, h: float, x) -> float | np.ndarray:
    """Gaussian-kernel Nadaraya-Watson estimate at query x.

    Computes sum_i K((x - x_i)/h) y_i / sum_i K((x - x_i)/h) with
    K(u) = exp(-u^2 / 2). When every weight underflows to zero the
    estimate falls back to the y of the nearest x_i, which keeps the
    prediction total on [0, 1].
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size == 0:
        raise ValidityError("cannot predict from an empty point set")
    if not h > 0:
        raise ValidityError(f"bandwidth must be positive, got {h!r}")
    q, scalar = _as_query(x)

    out = np.empty(q.shape[0])
    for start in range(0, q.shape[0], _NW_CHUNK):
        block = q[start : start + _NW_CHUNK]
        u = (block[:, None] - xs[None, :]) / h
        w = np.exp(-0.5 * u * u)
        s = w.sum(axis=1)
        ok = s > 0.0
        res = np.empty(block.shape[0])
        res[ok] = (w[ok] @ ys) / s[ok]
        if not ok.all():
            nearest = np.abs(block[~ok, None] - xs[None, :]).argmin(axis=1)
            res[~ok] = ys[nearest]
        out[start : start + _NW_CHUNK] = res
    return float(out[0]) if scalar else out


def default_bandwidth_grid() -> np.ndarray:
    """20 log-spaced bandwidths spanning [0.01, 0.5]."""
    lo, hi = BANDWIDTH_GRID_RANGE
    return np.geomspace(lo, hi, BANDWIDTH_GRID_SIZE)


def select_bandwidth(
    xs: np.ndarray, ys: np.ndarray, grid: Iterable[float]
) -> tuple[float, float]:
    """Leave-one-out cross-validation over a bandwidth grid.

    Returns (h*, rmse) where h* minimizes the LOOCV root-mean-squared
    prediction error; ties break toward the smaller bandwidth. Each fold
    uses the same underflow fallback as nw_predict, restricted to the
    remaining points.

    Raises
    ------
    ValidityError
        "degenerate fit" with fewer than 2 distinct x values; also on an
        empty or non-positive grid.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or np.unique(xs).size < 2:
        raise ValidityError("degenerate fit: need at least 2 points with distinct x")
    grid = sorted(float(h) for h in grid)
    if not grid:
        raise ValidityError("bandwidth grid must be nonempty")
    if grid[0] <= 0:
        raise ValidityError(f"bandwidths must be positive, got {grid[0]!r}")

    d = xs[:, None] - xs[None, :]
    absd = np.abs(d).astype(float)
    np.fill_diagonal(absd, np.inf)
    fallback = ys[absd.argmin(axis=1)]  # nearest neighbor, excluding self

    best_h = grid[0]
    best_rmse = np.inf
    for h in grid:
        w = np.exp(-0.5 * (d / h) ** 2)
        np.fill_diagonal(w, 0.0)
        s = w.sum(axis=1)
        ok = s > 0.0
        pred = np.where(ok, (w @ ys) / np.where(ok, s, 1.0), fallback)
        rmse = float(np.sqrt(np.mean((pred - ys) ** 2)))
        if rmse < best_rmse:
            best_rmse = rmse
            best_h = h
    return best_h, best_rmse


@dataclass(frozen=True, eq=False)
class OpinionPairSet:
    """Observed (original, rewritten) opinion pairs with stance labels.

    The stance label records the original text's side: "favor" covers
    opinions >= 0.5, "against" the rest.
    """

    x: np.ndarray
    y: np.ndarray
    stance: tuple[str, ...]

    def __post_init__(self):
        if self.x.ndim != 1 or self.y.ndim != 1:
            raise ValidityError("pair coordinates must be vectors")
        if not (self.x.size == self.y.size == len(self.stance)):
            raise ValidityError("pair fields must have equal length")
        _check_domain(self.x)
        _check_domain(self.y)
        for s in self.stance:
            if s not in _STANCES:
                raise ValidityError(f"stance must be one of {_STANCES}, got {s!r}")

    def __len__(self) -> int:
        return int(self.x.size)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[float, float, str]]) -> "OpinionPairSet":
        xs, ys, st = [], [], []
        for x, y, s in rows:
            xs.append(float(x))
            ys.append(float(y))
            st.append(s)
        return cls(np.asarray(xs), np.asarray(ys), tuple(st))

    def subset(self, mask: np.ndarray) -> "OpinionPairSet":
        keep = np.asarray(mask, dtype=bool)
        stance = tuple(s for s, k in zip(self.stance, keep) if k)
        return OpinionPairSet(self.x[keep], self.y[keep], stance)


def fit_kernel(pairs: OpinionPairSet, grid: Iterable[float] | None = None) -> KernelTransform:
    """Kernel transform over the pairs with LOOCV-selected bandwidth."""
    if grid is None:
        grid = default_bandwidth_grid()
    h, _ = select_bandwidth(pairs.x, pairs.y, grid)
    return KernelTransform(xs=pairs.x.copy(), ys=pairs.y.copy(), bandwidth=h)


def one_off_bias(f: Transformation, x0: np.ndarray) -> float:
    """Mean of f(x) - x over a vector of innate opinions.

    For a LinearTransform this equals
    (1 - slope) * (neutral_point - mean(x0)) up to rounding.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.size == 0:
        raise ValidityError("one_off_bias needs a nonempty opinion vector")
    return float(np.mean(f.apply(x0) - x0))


@dataclass(frozen=True)
class BiasStats:
    """Sample mean of y - x with a percentile-bootstrap 95% interval."""

    mean: float
    ci_low: float
    ci_high: float


def bias_stats(pairs: OpinionPairSet, resamples: int, seed: int) -> BiasStats:
    """Mean rewrite bias and its seeded bootstrap confidence interval.

    Resamples pairs with replacement ``resamples`` times using
    numpy's default generator, so results are bit-reproducible for a
    fixed (pairs, resamples, seed) triple.
    """
    if len(pairs) == 0:
        raise ValidityError("bias_stats needs a nonempty pair set")
    if resamples < 1:
        raise ValidityError(f"bootstrap resamples must be >= 1, got {resamples}")
    beta = pairs.y - pairs.x
    n = beta.size
    rng = np.random.default_rng(seed)
    means = np.empty(resamples)
    # Draw in fixed-size blocks: bounded memory, same stream either way.
    block = 1024
    for start in range(0, resamples, block):
        count = min(block, resamples - start)
        idx = rng.integers(0, n, size=(count, n))
        means[start : start + count] = beta[idx].mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return BiasStats(mean=float(beta.mean()), ci_low=float(lo), ci_high=float(hi))


def stance_match_filter(pairs: OpinionPairSet) -> OpinionPairSet:
    """Keep pairs whose rewrite stays on the original's side of 0.5.

    0.5 itself counts as "favor", so a pair is kept iff x and y are both
    >= 0.5 or both < 0.5.
    """
    keep = (pairs.x >= 0.5) == (pairs.y >= 0.5)
    return pairs.subset(keep)


# ---------------------------------------------------------------------------
# Serialization

PAIRS_HEADER = ["x", "y", "stance"]


def read_pairs_csv(stream: IO[str]) -> OpinionPairSet:
    """Read an OpinionPairSet from CSV with header x,y,stance."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty pairs file") from None
    if [h.strip() for h in header] != PAIRS_HEADER:
        raise ParseError(f"expected header {','.join(PAIRS_HEADER)!r}, got {header!r}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            x = float(row[0])
            y = float(row[1])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric opinion value") from None
        stance = row[2].strip()
        if stance not in _STANCES:
            raise ParseError(f"line {lineno}: stance must be favor or against, got {stance!r}")
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise ParseError(f"line {lineno}: opinion outside [0, 1]")
        rows.append((x, y, stance))
    if not rows:
        raise ParseError("no pairs")
    return OpinionPairSet.from_rows(rows)


def write_pairs_csv(pairs: OpinionPairSet, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(PAIRS_HEADER)
    for x, y, s in zip(pairs.x, pairs.y, pairs.stance):
        writer.writerow([repr(float(x)), repr(float(y)), s])


def transform_from_dict(d: dict) -> Transformation:
    """Inverse of to_dict for every transform kind."""
    if not isinstance(d, dict):
        raise ValidityError("transform document must be a JSON object")
    kind = d.get("kind")
    try:
        if kind == "identity":
            return IdentityTransform()
        if kind == "linear":
            return make_linear(float(d["m"]), float(d["b"]))
        if kind == "kernel":
            return KernelTransform(
                xs=np.asarray(d["x"], dtype=float),
                ys=np.asarray(d["y"], dtype=float),
                bandwidth=float(d["bandwidth"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidityError):
            raise
        raise ValidityError(f"bad {kind} transform fields: {exc}") from exc
    raise ValidityError(f"unknown transform kind {kind!r}")


def load_transform(path) -> Transformation:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not valid JSON: {exc}") from exc
    return transform_from_dict(doc)


def save_transform(f: Transformation, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(f.to_dict(), fh, indent=2)
        fh.write("\n")
