"""Exact arithmetic on truncated Fourier-coefficient fields.

A coefficient field assigns one complex value to every integer multi-index
alpha with |alpha|_inf <= N on a d-dimensional lattice window; indices
outside the window are implicitly zero.  Products of the underlying
trigonometric sums correspond to discrete convolutions of the fields, so
this module provides convolution, convolution powers, the truncated
alternating convolution exponential

    delta_0 + sum_{n=1}^{n2} (-1)^n / n! * y^{*n},

the ell^1 norm, and Hermitian-symmetry utilities.

Conventions
-----------
* Window enumeration is lexicographic on components, smallest first
  ((-N,...,-N) up to (N,...,N)); this equals C order of the value array.
* Convolution powers keep intermediate supports exact (the support radius
  grows to k*N after k factors); only the final result is restricted to the
  requested output window.  No wraparound aliasing ever occurs.
* Direct nested summation is the reference algorithm.  An FFT path exists
  for large supports and must agree with the direct path to 1e-11 relative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Window",
    "CoefficientField",
    "convolve",
    "conv_power",
    "conv_exp_truncated",
    "l1_norm",
    "hermitian_project",
    "hermitian_defect",
    "format_float",
]


def format_float(x: float) -> str:
    """Render a float at 17 significant digits (lossless double round-trip)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Window:
    """Cubic lattice window {alpha in Z^d : |alpha|_inf <= radius}.

    Enumeration order is lexicographic on components; ``offset`` and
    ``index_at`` are mutually inverse maps between multi-indices and flat
    positions in that order.
    """

    dim: int
    radius: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        if self.radius < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def size(self) -> int:
        return self.side**self.dim

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.dim

    def contains(self, alpha) -> bool:
        return len(alpha) == self.dim and all(abs(a) <= self.radius for a in alpha)

    def offset(self, alpha) -> int:
        """Flat position of a multi-index in lexicographic enumeration."""
        if not self.contains(alpha):
            raise ValueError(f"index {tuple(alpha)} outside window {self}")
        pos = 0
        for a in alpha:
            pos = pos * self.side + (a + self.radius)
        return pos

    def index_at(self, offset: int) -> tuple:
        """Multi-index at a flat position (inverse of ``offset``)."""
        if not 0 <= offset < self.size:
            raise ValueError(f"offset {offset} out of range for {self}")
        comps = []
        for _ in range(self.dim):
            offset, r = divmod(offset, self.side)
            comps.append(r - self.radius)
        return tuple(reversed(comps))

    def indices(self):
        """Iterate all multi-indices in enumeration order."""
        for pos in np.ndindex(*self.shape):
            yield tuple(p - self.radius for p in pos)

    def index_array(self) -> NDArray[np.int64]:
        """All multi-indices as an (size, dim) int array, enumeration order."""
        grids = np.meshgrid(
            *[np.arange(-self.radius, self.radius + 1)] * self.dim, indexing="ij"
        )
        return np.stack([g.ravel() for g in grids], axis=1)


class CoefficientField:
    """Complex values on a lattice window; zero outside the window.

    Values are stored as a dense complex array of shape ``window.shape``
    whose axes follow the enumeration order.  Fields are treated as
    immutable after construction: all operations return new fields.
    """

    __slots__ = ("window", "values")

    def __init__(self, window: Window, values: NDArray[np.complexfloating]):
        values = np.asarray(values, dtype=complex)
        if values.shape != window.shape:
            raise ValueError(
                f"values shape {values.shape} does not match window shape {window.shape}"
            )
        self.window = window
        self.values = values

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, window: Window) -> "CoefficientField":
        return cls(window, np.zeros(window.shape, dtype=complex))

    @classmethod
    def delta(cls, window: Window, alpha=None, value: complex = 1.0) -> "CoefficientField":
        """Field with a single nonzero entry (origin by default)."""
        if alpha is None:
            alpha = (0,) * window.dim
        v = np.zeros(window.shape, dtype=complex)
        v[tuple(a + window.radius for a in alpha)] = value
        return cls(window, v)

    # -- access ------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.window.dim

    def value(self, alpha) -> complex:
        """Entry at a multi-index; indices outside the window are zero."""
        if len(alpha) != self.dim:
            raise ValueError(f"index length {len(alpha)} != dimension {self.dim}")
        if not self.window.contains(alpha):
            return 0.0 + 0.0j
        return complex(self.values[tuple(a + self.window.radius for a in alpha)])

    def restricted(self, out_window: Window) -> "CoefficientField":
        """Copy onto another window; clipped entries drop, new entries are zero."""
        if out_window.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {out_window.dim}")
        out = np.zeros(out_window.shape, dtype=complex)
        lo = min(self.window.radius, out_window.radius)
        src = tuple(
            slice(self.window.radius - lo, self.window.radius + lo + 1)
            for _ in range(self.dim)
        )
        dst = tuple(
            slice(out_window.radius - lo, out_window.radius + lo + 1)
            for _ in range(self.dim)
        )
        out[dst] = self.values[src]
        return CoefficientField(out_window, out)

    def copy(self) -> "CoefficientField":
        return CoefficientField(self.window, self.values.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CoefficientField)
            and self.window == other.window
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"CoefficientField(dim={self.dim}, radius={self.window.radius})"

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        """JSON form: nonzero entries [a1,...,ad,re,im] in enumeration order."""
        entries = []
        flat = self.values.ravel()
        for pos, z in enumerate(flat):
            if z != 0:
                alpha = self.window.index_at(pos)
                entries.append(list(alpha) + [z.real, z.imag])
        return {"dim": self.dim, "radius": self.window.radius, "entries": entries}

    def to_json(self) -> str:
        return dumps_json(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CoefficientField":
        window = Window(int(obj["dim"]), int(obj["radius"]))
        field = cls.zeros(window)
        for entry in obj["entries"]:
            alpha = tuple(int(a) for a in entry[: window.dim])
            re, im = float(entry[window.dim]), float(entry[window.dim + 1])
            field.values[tuple(a + window.radius for a in alpha)] = complex(re, im)
        return field

    @classmethod
    def from_json(cls, text: str) -> "CoefficientField":
        return cls.from_json_dict(json.loads(text))


def _check_same_dim(a: CoefficientField, b, what: str):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch in {what}: {a.dim} vs {b.dim}")


def _full_convolve_direct(av, bv):
    """Linear convolution of two dense cubes by shift-and-add nested sums."""
    d = av.ndim
    na = (av.shape[0] - 1) // 2
    nb = (bv.shape[0] - 1) // 2
    side = 2 * (na + nb) + 1
    out = np.zeros((side,) * d, dtype=complex)
    for pos in np.ndindex(*av.shape):
        coeff = av[pos]
        if coeff == 0:
            continue
        region = tuple(slice(p, p + bv.shape[0]) for p in pos)
        out[region] += coeff * bv
    return out


def _full_convolve_fft(av, bv):
    """Zero-padded FFT linear convolution; same support as the direct path."""
    d = av.ndim
    na = (av.shape[0] - 1) // 2
    nb = (bv.shape[0] - 1) // 2
    side = 2 * (na + nb) + 1
    fa = np.fft.fftn(av, s=(side,) * d)
    fb = np.fft.fftn(bv, s=(side,) * d)
    return np.fft.ifftn(fa * fb)


def _full_convolve(av, bv, method: str):
    if method == "direct":
        return _full_convolve_direct(av, bv)
    if method == "fft":
        return _full_convolve_fft(av, bv)
    raise ValueError(f"unknown convolution method {method!r}")


def convolve(
    a: CoefficientField,
    b: CoefficientField,
    out_window: Window,
    method: str = "direct",
) -> CoefficientField:
    """Discrete convolution restricted to an output window.

    result(gamma) = sum over alpha + beta = gamma of a(alpha) * b(beta),
    with alpha in a's window and beta in b's window (zero padding outside,
    no wraparound).  The full support is formed first and then restricted,
    so every pair is summed exactly.

    Parameters
    ----------
    a, b : CoefficientField
        Operands; must share the ambient dimension.
    out_window : Window
        Window of the returned field.
    method : {'direct', 'fft'}
        'direct' is the reference nested summation; 'fft' must agree with
        it to 1e-11 relative and is useful for large supports.
    """
    _check_same_dim(a, b, "convolve")
    _check_same_dim(a, out_window, "convolve")
    full = _full_convolve(a.values, b.values, method)
    nfull = a.window.radius + b.window.radius
    return CoefficientField(Window(a.dim, nfull), full).restricted(out_window)


def _power_ladder(values, n, method):
    """Full-support convolution powers values^{*1..n}, supports kept exact."""
    powers = [values]
    for _ in range(1, n):
        powers.append(_full_convolve(powers[-1], values, method))
    return powers


def conv_power(
    y: CoefficientField, n: int, out_window: Window, method: str = "direct"
) -> CoefficientField:
    """n-fold self-convolution with exact intermediate supports.

    n = 0 gives the convolution identity delta_0 on the output window.
    For n >= 1 intermediate supports grow to radius k * y.radius at step k
    and only the final power is restricted to ``out_window``.
    """
    if n < 0:
        raise ValueError(f"power must be >= 0, got {n}")
    _check_same_dim(y, out_window, "conv_power")
    if n == 0:
        return CoefficientField.delta(out_window)
    full = _power_ladder(y.values, n, method)[-1]
    return CoefficientField(Window(y.dim, n * y.window.radius), full).restricted(out_window)


def _kahan_add(total, comp, term):
    """One compensated-summation step, elementwise over arrays."""
    t = term - comp
    s = total + t
    comp = (s - total) - t
    return s, comp


def conv_exp_truncated(
    y: CoefficientField, n2: int, out_window: Window, method: str = "direct"
) -> CoefficientField:
    """Truncated alternating convolution exponential.

    Returns delta_0 + sum_{n=1}^{n2} (-1)^n / n! * y^{*n} on ``out_window``,
    every power computed under the exact-intermediate-support rule.  Terms
    are accumulated in ascending n with Kahan compensation so the summation
    order is reproducible.
    """
    if n2 < 1:
        raise ValueError(f"series order must be >= 1, got {n2}")
    _check_same_dim(y, out_window, "conv_exp_truncated")
    total = CoefficientField.delta(out_window).values
    comp = np.zeros_like(total)
    power = y.values  # y^{*n}, full support
    coeff = 1.0
    for n in range(1, n2 + 1):
        coeff *= -1.0 / n
        restricted = CoefficientField(
            Window(y.dim, n * y.window.radius), power
        ).restricted(out_window)
        total, comp = _kahan_add(total, comp, coeff * restricted.values)
        if n < n2:
            power = _full_convolve(power, y.values, method)
    return CoefficientField(out_window, total)


def l1_norm(y: CoefficientField) -> float:
    """Sum of entry magnitudes over the window."""
    return float(np.abs(y.values).sum())


def hermitian_project(y: CoefficientField) -> CoefficientField:
    """Project onto Hermitian symmetry: result(a) = (y(a) + conj(y(-a))) / 2.

    Idempotent; the output satisfies y(-a) = conj(y(a)) exactly, which makes
    the associated trigonometric sum real-valued.
    """
    mirrored = np.conj(np.flip(y.values))
    return CoefficientField(y.window, 0.5 * (y.values + mirrored))


def hermitian_defect(y: CoefficientField) -> float:
    """Max |y(a) - conj(y(-a))| over the window (0 iff Hermitian)."""
    mirrored = np.conj(np.flip(y.values))
    return float(np.max(np.abs(y.values - mirrored)))


def _format_json_value(obj) -> str:
    if isinstance(obj, dict):
        items = ", ".join(
            f"{json.dumps(k)}: {_format_json_value(v)}" for k, v in obj.items()
        )
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_format_json_value(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    return json.dumps(obj)


def dumps_json(obj) -> str:
    """Serialize to JSON with floats at 17 significant digits."""
    return _format_json_value(obj)
