"""Damped Newton solver for the truncated moment-matching system.

The shifted target q = p0 + 1 is modeled as q(x) = e^{-E(x,y)} with the
partition constant absorbed into the origin coefficient, which turns the
moment identities into the square polynomial system

    F_a(y) = (2*pi)^d * [expstar_{n2}(-y)(a) - delta_0(a)] - m_hat(a) = 0

for every a in the lattice window, where expstar_{n2} is the truncated
convolution exponential and m_hat the empirical moments.  Unknowns are the
real and imaginary parts on the lexicographic upper half lattice with a
real origin entry (Hermitian symmetry built in), giving exactly
(2*N1+1)^d real unknowns; the analytic Jacobian uses

    d/dy_b  y^{*n}(a) = n * y^{*(n-1)}(a - b)

with convolution powers under the exact-intermediate-support rule.  The
linear solves are deterministic partial-pivot elimination and steps are
damped by a backtracking line search on the residual sup-norm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .algebra import (
    CoefficientField,
    Window,
    conv_exp_truncated,
    dumps_json,
    _full_convolve,
)
from .empirical import MomentField

__all__ = [
    "SolverConfig",
    "SolverReport",
    "HalfLatticeParams",
    "constant_density_coefficient",
    "forward_moments",
    "residual",
    "jacobian",
    "newton_solve",
    "solve_independent",
    "assemble_axes",
]

_ARMIJO = 1e-4
_PIVOT_RTOL = 1e-12


@dataclass
class SolverConfig:
    """Truncation orders, tolerances, and line-search parameters.

    n1 is the lattice radius of retained coefficients, n2 the number of
    retained exponential-series terms.  mode selects the full joint system
    or d decoupled 1-d systems for independent components.
    """

    n1: int
    n2: int
    max_iter: int = 100
    tol_residual: float = 1e-10
    tol_step: float = 1e-12
    shrink: float = 0.5
    min_step: float = 2.0**-20
    mode: str = "full"

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"truncation orders must be >= 1, got n1={self.n1}, n2={self.n2}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.tol_residual <= 0 or self.tol_step <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink factor must lie in (0, 1), got {self.shrink}")
        if self.min_step <= 0:
            raise ValueError(f"min_step must be positive, got {self.min_step}")
        if self.mode not in ("full", "independent"):
            raise ValueError(f"mode must be 'full' or 'independent', got {self.mode!r}")

    _JSON_KEYS = (
        "n1", "n2", "max_iter", "tol_residual", "tol_step", "shrink", "min_step", "mode",
    )

    def to_json_dict(self) -> dict:
        return {k: getattr(self, k) for k in self._JSON_KEYS}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SolverConfig":
        unknown = set(obj) - set(cls._JSON_KEYS)
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        if "n1" not in obj or "n2" not in obj:
            raise ValueError("solver config requires 'n1' and 'n2'")
        return cls(**{k: obj[k] for k in cls._JSON_KEYS if k in obj})

    @classmethod
    def from_json(cls, text: str) -> "SolverConfig":
        return cls.from_json_dict(json.loads(text))


@dataclass
class SolverReport:
    """Convergence diagnostics for one Newton run."""

    iterations: int
    final_residual_norm: float
    residual_history: list
    step_history: list
    termination: str  # converged | max_iter | stalled | singular_jacobian

    def to_json_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_residual_norm": self.final_residual_norm,
            "residual_history": list(self.residual_history),
            "step_history": list(self.step_history),
            "termination": self.termination,
        }

    def to_json(self) -> str:
        return dumps_json(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SolverReport":
        return cls(
            iterations=int(obj["iterations"]),
            final_residual_norm=float(obj["final_residual_norm"]),
            residual_history=[float(v) for v in obj["residual_history"]],
            step_history=[float(v) for v in obj["step_history"]],
            termination=str(obj["termination"]),
        )


def constant_density_coefficient(dim: int) -> float:
    """Origin coefficient -ln(1 + (2*pi)^-d) solving the system for the
    uniform density (the maximum-entropy initial iterate)."""
    return -math.log1p((2.0 * np.pi) ** -dim)


class HalfLatticeParams:
    """Real parameterization of Hermitian fields on a window.

    The unknown vector is [y_0] ++ Re(y_a) ++ Im(y_a) over the lexicographic
    upper half lattice; unpacking mirrors conjugates onto the lower half, so
    every produced field is Hermitian exactly.
    """

    def __init__(self, window: Window):
        self.window = window
        m = window.size
        self.center = m // 2
        self.half = np.arange(self.center + 1, m)
        self.mirror = m - 1 - self.half

    @property
    def size(self) -> int:
        return self.window.size

    def pack(self, field_values: NDArray) -> NDArray[np.floating]:
        flat = np.asarray(field_values).ravel()
        h = flat[self.half]
        return np.concatenate(([flat[self.center].real], h.real, h.imag))

    def unpack(self, u: NDArray) -> CoefficientField:
        m = self.size
        nh = len(self.half)
        flat = np.empty(m, dtype=complex)
        flat[self.center] = u[0]
        upper = u[1 : 1 + nh] + 1j * u[1 + nh :]
        flat[self.half] = upper
        flat[self.mirror] = np.conj(upper)
        return CoefficientField(self.window, flat.reshape(self.window.shape))

    def realify(self, field_values: NDArray) -> NDArray[np.floating]:
        """Real residual vector [Re F_0] ++ Re F_half ++ Im F_half."""
        flat = np.asarray(field_values).ravel()
        h = flat[self.half]
        return np.concatenate(([flat[self.center].real], h.real, h.imag))

    def realify_matrix(self, jc: NDArray) -> NDArray[np.floating]:
        """Real Jacobian of the realified residual from the complex matrix
        jc[a, b] = dF_a / dy_b (full-lattice complex derivatives)."""
        cols = np.empty_like(jc)
        cols[:, 0] = jc[:, self.center]
        nh = len(self.half)
        cols[:, 1 : 1 + nh] = jc[:, self.half] + jc[:, self.mirror]
        cols[:, 1 + nh :] = 1j * (jc[:, self.half] - jc[:, self.mirror])
        out = np.empty((self.size, self.size), dtype=float)
        out[0, :] = cols[self.center, :].real
        out[1 : 1 + nh, :] = cols[self.half, :].real
        out[1 + nh :, :] = cols[self.half, :].imag
        return out


def forward_moments(y: CoefficientField, n2: int, method: str = "direct") -> MomentField:
    """Model-side moments (2*pi)^d * [expstar_{n2}(-y) - delta_0] on y's window."""
    window = y.window
    ce = conv_exp_truncated(y, n2, window, method=method)
    values = ce.values.copy()
    values[(window.radius,) * window.dim] -= 1.0
    return MomentField(window, (2.0 * np.pi) ** y.dim * values, sample_count=0)


def residual(
    y: CoefficientField, moments: MomentField, n2: int, method: str = "direct"
) -> CoefficientField:
    """F(y) = forward_moments(y) - m_hat on the shared window."""
    if y.window != moments.window:
        raise ValueError(
            f"window mismatch: coefficients {y.window}, moments {moments.window}"
        )
    model = forward_moments(y, n2, method=method)
    return CoefficientField(y.window, model.values - moments.values)


def _series_kernel(y: CoefficientField, n2: int, method: str) -> CoefficientField:
    """G = sum_{n=1}^{n2} (-1)^n/(n-1)! * y^{*(n-1)} on the doubled window,
    so that dF_a/dy_b = (2*pi)^d * G(a - b)."""
    doubled = Window(y.dim, 2 * y.window.radius)
    total = -CoefficientField.delta(doubled).values  # n = 1 term
    power = None
    coeff = -1.0
    for n in range(2, n2 + 1):
        coeff *= -1.0 / (n - 1)
        power = y.values if power is None else _full_convolve(power, y.values, method)
        restricted = CoefficientField(
            Window(y.dim, (n - 1) * y.window.radius), power
        ).restricted(doubled)
        total = total + coeff * restricted.values
    return CoefficientField(doubled, total)


def jacobian(y: CoefficientField, n2: int, method: str = "direct") -> NDArray[np.floating]:
    """Analytic Jacobian of the realified residual, as a real square matrix
    in the half-lattice parameterization (y must be Hermitian)."""
    params = HalfLatticeParams(y.window)
    g = _series_kernel(y, n2, method)
    idx = y.window.index_array()
    diff = idx[:, None, :] - idx[None, :, :] + g.window.radius
    jc = (2.0 * np.pi) ** y.dim * g.values[tuple(diff[..., k] for k in range(y.dim))]
    return params.realify_matrix(jc)


class _SingularMatrix(Exception):
    pass


def _lu_solve(a: NDArray, b: NDArray) -> NDArray:
    """Partial-pivot Gaussian elimination; raises on a pivot below
    1e-12 of the largest pivot encountered."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = b.shape[0]
    pivots = np.empty(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        pivots[k] = abs(a[k, k])
        if a[k, k] == 0.0:
            raise _SingularMatrix
        mult = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k + 1 :] -= np.outer(mult, a[k, k + 1 :])
        b[k + 1 :] -= mult * b[k]
    if pivots.min() < _PIVOT_RTOL * pivots.max():
        raise _SingularMatrix
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x


def _sup_norm(values: NDArray) -> float:
    return float(np.max(np.abs(values)))


def newton_solve(moments: MomentField, config: SolverConfig):
    """Solve the moment-matching system by damped Newton iteration.

    Starts from the constant-density coefficient field, iterates Newton
    steps with backtracking on the residual sup-norm, and stops on the
    residual tolerance, a vanishing update, a singular Jacobian, two
    consecutive failed line searches, or the iteration cap.

    Returns
    -------
    (CoefficientField, SolverReport)
        Hermitian solution iterate and the convergence diagnostics.
    """
    if moments.window.radius != config.n1:
        raise ValueError(
            f"moments window radius {moments.window.radius} != config n1 {config.n1}"
        )
    window = moments.window
    params = HalfLatticeParams(window)
    y = CoefficientField.delta(window, value=constant_density_coefficient(window.dim))
    u = params.pack(y.values)

    def residual_of(uvec):
        f = residual(params.unpack(uvec), moments, config.n2)
        return f.values.ravel()

    fvals = residual_of(u)
    norm = _sup_norm(fvals)
    history = [norm]
    steps: list = []
    termination = "max_iter"
    iterations = 0

    if norm <= config.tol_residual:
        termination = "converged"
    else:
        stall_count = 0
        for _ in range(config.max_iter):
            iterations += 1
            jac = jacobian(params.unpack(u), config.n2)
            try:
                du = _lu_solve(jac, -params.realify(fvals))
            except _SingularMatrix:
                termination = "singular_jacobian"
                iterations -= 1
                break

            t = 1.0
            accepted = False
            while t >= config.min_step:
                trial = u + t * du
                trial_f = residual_of(trial)
                trial_norm = _sup_norm(trial_f)
                if trial_norm <= norm * (1.0 - _ARMIJO * t):
                    accepted = True
                    break
                t *= config.shrink

            if not accepted:
                steps.append(0.0)
                history.append(norm)
                stall_count += 1
                if stall_count >= 2:
                    termination = "stalled"
                    break
                continue

            stall_count = stall_count + 1 if t <= config.min_step else 0
            u = trial
            fvals = trial_f
            norm = trial_norm
            steps.append(t)
            history.append(norm)
            if norm <= config.tol_residual:
                termination = "converged"
                break
            if _sup_norm(t * du) <= config.tol_step:
                termination = "stalled"
                break
            if stall_count >= 2:
                termination = "stalled"
                break

    report = SolverReport(
        iterations=iterations,
        final_residual_norm=norm,
        residual_history=history,
        step_history=steps,
        termination=termination,
    )
    return params.unpack(u), report


def solve_independent(moments_per_axis, config: SolverConfig):
    """Solve d decoupled 1-d systems of the same residual form.

    Each entry of ``moments_per_axis`` is the 1-d empirical moment field of
    one coordinate; the k-th result models that coordinate's shifted
    marginal.  For d = 1 this is exactly one ``newton_solve`` call.

    Returns
    -------
    list of (CoefficientField, SolverReport)
    """
    if config.mode != "independent":
        raise ValueError("solve_independent requires config.mode == 'independent'")
    results = []
    for m in moments_per_axis:
        if m.dim != 1:
            raise ValueError("independent mode requires 1-d moment fields")
        results.append(newton_solve(m, config))
    return results


def assemble_axes(axis_fields) -> CoefficientField:
    """Embed 1-d coefficient fields onto the axes of a joint field.

    Off-axis entries are zero and the origin entry is the sum of the axis
    origins, matching the additive energy of independent components
    E(x) = sum_k E_k(x_k).  Meaningful for unshifted (log-density)
    coefficients, where independence makes the joint field axis-supported.
    """
    d = len(axis_fields)
    if d < 1:
        raise ValueError("need at least one axis field")
    radius = max(f.window.radius for f in axis_fields)
    for f in axis_fields:
        if f.dim != 1:
            raise ValueError("axis fields must be one-dimensional")
    window = Window(d, radius)
    out = CoefficientField.zeros(window)
    origin = (radius,) * d
    for k, f in enumerate(axis_fields):
        r = f.window.radius
        for eta in range(-r, r + 1):
            if eta == 0:
                continue
            pos = list(origin)
            pos[k] = eta + radius
            out.values[tuple(pos)] = f.value((eta,))
        out.values[origin] += f.value((0,))
    return out
