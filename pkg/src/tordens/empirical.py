"""Sample ingestion and empirical characteristic-function moments.

The data-side quantity of the estimation system is the sample average

    m_hat(alpha) = (1/M) * sum_n exp(-i alpha . x[n])

over points x[n] inside the torus window [-pi, pi]^d.  Moments are
accumulated in sample order with compensated summation on a half lattice
and mirrored, so Hermitian symmetry m_hat(-alpha) = conj(m_hat(alpha))
holds bit-exactly and the origin entry is pinned to 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .algebra import CoefficientField, Window, dumps_json, format_float

__all__ = [
    "Dataset",
    "MomentField",
    "MomentAccumulator",
    "empirical_moments",
    "axis_moments",
]


@dataclass
class Dataset:
    """Ordered list of d-dimensional sample points inside [-pi, pi]^d.

    Order is preserved: the generating process may be merely ergodic, not
    i.i.d., so permutations are not applied silently.
    """

    points: NDArray[np.floating]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("dataset requires a nonempty (count, dim) array of points")
        bad = np.nonzero(np.any(np.abs(pts) > np.pi, axis=1))[0]
        if bad.size:
            raise ValueError(
                f"sample {int(bad[0])} has a coordinate outside [-pi, pi]"
            )
        self.points = pts

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def axis(self, k: int) -> "Dataset":
        """1-d dataset of the k-th coordinate, order preserved."""
        return Dataset(self.points[:, [k]])

    # -- CSV format: one sample per row, d float columns, optional x1..xd header

    def to_csv(self, path, manifest: dict | None = None):
        with open(path, "w", encoding="utf-8") as fh:
            if manifest is not None:
                fh.write("# " + dumps_json(manifest) + "\n")
            fh.write(",".join(f"x{k + 1}" for k in range(self.dim)) + "\n")
            for row in self.points:
                fh.write(",".join(format_float(v) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        rows = []
        dim = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                tokens = line.split(",")
                if dim is None:
                    header = [f"x{k + 1}" for k in range(len(tokens))]
                    if [t.strip() for t in tokens] == header:
                        dim = len(tokens)
                        continue
                try:
                    values = [float(t) for t in tokens]
                except ValueError:
                    raise ValueError(f"malformed CSV row {lineno}: {line!r}") from None
                if dim is None:
                    dim = len(values)
                elif len(values) != dim:
                    raise ValueError(
                        f"malformed CSV row {lineno}: expected {dim} columns, got {len(values)}"
                    )
                rows.append(values)
        if not rows:
            raise ValueError("empty dataset")
        return cls(np.array(rows, dtype=float))


@dataclass
class MomentField:
    """Complex moment values on a lattice window plus the sample count.

    Fields built by ``empirical_moments`` satisfy m_hat(0) = 1 exactly,
    |m_hat| <= 1 and exact Hermitian symmetry.  Synthetic fields (e.g. a
    forward model evaluated at trial coefficients) may be constructed
    directly and are not forced to satisfy those bounds.
    """

    window: Window
    values: NDArray[np.complexfloating]
    sample_count: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.window.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match window shape {self.window.shape}"
            )
        self.values = vals

    @property
    def dim(self) -> int:
        return self.window.dim

    def value(self, alpha) -> complex:
        return CoefficientField(self.window, self.values).value(alpha)

    def as_field(self) -> CoefficientField:
        return CoefficientField(self.window, self.values.copy())

    def to_json_dict(self) -> dict:
        obj = CoefficientField(self.window, self.values).to_json_dict()
        obj["sample_count"] = int(self.sample_count)
        return obj

    def to_json(self) -> str:
        return dumps_json(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MomentField":
        f = CoefficientField.from_json_dict(obj)
        return cls(f.window, f.values, int(obj.get("sample_count", 0)))

    @classmethod
    def from_json(cls, text: str) -> "MomentField":
        return cls.from_json_dict(json.loads(text))


class MomentAccumulator:
    """Streaming accumulator for empirical moments.

    Maintains Kahan-compensated sums of exp(-i alpha . x) on the lexicographic
    upper half lattice (entries after the origin); the lower half is mirrored
    at finalization and the origin entry is pinned to exactly 1.
    """

    def __init__(self, window: Window):
        self.window = window
        center = window.size // 2
        self._half = window.index_array()[center + 1 :]  # (h, d) int array
        self._sum = np.zeros(len(self._half), dtype=complex)
        self._comp = np.zeros(len(self._half), dtype=complex)
        self.count = 0

    def update(self, x) -> None:
        """Fold one sample in; rejects out-of-window points unchanged."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.window.dim:
            raise ValueError(
                f"point dimension {x.shape[0]} != window dimension {self.window.dim}"
            )
        if np.any(np.abs(x) > np.pi):
            raise ValueError(f"point {x.tolist()} outside [-pi, pi]^d")
        term = np.exp(-1j * (self._half @ x))
        t = term - self._comp
        s = self._sum + t
        self._comp = (s - self._sum) - t
        self._sum = s
        self.count += 1

    def merge(self, other: "MomentAccumulator") -> None:
        """Fold another accumulator in (fixed left-then-right reduction order)."""
        if other.window != self.window:
            raise ValueError("accumulator windows differ")
        self._sum = self._sum + other._sum
        self._comp = self._comp + other._comp
        self.count += other.count

    def finalize(self) -> MomentField:
        if self.count < 1:
            raise ValueError("no samples accumulated")
        values = np.zeros(self.window.size, dtype=complex)
        center = self.window.size // 2
        half = self._sum / self.count
        values[center] = 1.0
        values[center + 1 :] = half
        values[:center] = np.conj(half[::-1])
        return MomentField(self.window, values.reshape(self.window.shape), self.count)


def empirical_moments(data: Dataset, window: Window) -> MomentField:
    """Empirical characteristic-function moments of a dataset.

    value(alpha) = (1/M) * sum_n exp(-i alpha . x[n]) for every alpha in the
    window, computed on the half lattice in sample order with compensated
    accumulation and mirrored, with the origin pinned to 1.
    """
    if data.dim != window.dim:
        raise ValueError(f"dimension mismatch: data {data.dim}, window {window.dim}")
    acc = MomentAccumulator(window)
    for x in data.points:
        acc.update(x)
    return acc.finalize()


def axis_moments(data: Dataset, radius: int) -> list:
    """Per-coordinate 1-d empirical moments (for the independent-mode solver)."""
    return [
        empirical_moments(data.axis(k), Window(1, radius)) for k in range(data.dim)
    ]
