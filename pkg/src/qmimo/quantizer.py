"""Scalar ADC quantizers for Gaussian inputs and the linear (Bussgang) model.

Quantizer specs are normalized to a unit-variance real input; callers scale by
the per-component standard deviation. Cell ``i`` is ``[t_{i-1}, t_i)``, so an
input sitting exactly on a threshold falls into the upper cell (zero maps to
the innermost positive level).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr

from qmimo.numerics import RngLike, as_generator, gram_inverse, hermitian

QuantizerKind = Literal["uniform", "lloyd_max"]

MAX_BITS = 8
LLOYD_TOL = 1e-10
LLOYD_MAX_SWEEPS = 10_000
LLOYD_WARMUP = 50
# sweeps continue past LLOYD_TOL down to this movement
LLOYD_STOP = 1e-12

# Distortion factors of Gaussian-optimal (Lloyd-Max) quantizers, b = 1..5
TABLE_RHO = {1: 0.3634, 2: 0.1175, 3: 0.03454, 4: 0.009497, 5: 0.002499}

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class NoConvergence(RuntimeError):
    pass


def _pdf(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return np.where(np.isinf(x), 0.0, _INV_SQRT_2PI * np.exp(-0.5 * x * x))


def _cell_mass(lo, hi):
    # upper-tail form keeps precision for cells far out on the positive side
    return np.where(lo > 0, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


def _edges(thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = np.concatenate(([-np.inf], thresholds))
    hi = np.concatenate((thresholds, [np.inf]))
    return lo, hi


def _cell_moments(thresholds: np.ndarray):
    """Zeroth, first and second partial moments of N(0,1) over each cell."""
    lo, hi = _edges(thresholds)
    m0 = _cell_mass(lo, hi)
    m1 = _pdf(lo) - _pdf(hi)
    lo_term = np.where(np.isinf(lo), 0.0, np.nan_to_num(lo) * _pdf(lo))
    hi_term = np.where(np.isinf(hi), 0.0, np.nan_to_num(hi) * _pdf(hi))
    m2 = m0 + lo_term - hi_term
    return m0, m1, m2


@dataclass(frozen=True, eq=False)
class QuantizerSpec:
    """One b-bit scalar quantizer for a unit-variance real input."""

    b: int
    kind: QuantizerKind
    thresholds: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        v = np.asarray(self.levels, dtype=float)
        n = 1 << self.b
        if v.shape != (n,) or t.shape != (n - 1,):
            raise ValueError(f"b={self.b} needs {n} levels and {n - 1} thresholds")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "levels", v)

    def __call__(self, z):
        idx = np.searchsorted(self.thresholds, z, side="right")
        return self.levels[idx]

    def to_table(self) -> str:
        return format_table(self)


def format_table(spec: QuantizerSpec) -> str:
    """Plain-text dump: one ``key value...`` line per field, floats at full precision."""
    fmt = lambda xs: " ".join(repr(float(x)) for x in xs)  # noqa: E731
    return "\n".join(
        [
            f"b {spec.b}",
            f"kind {spec.kind}",
            f"rho {distortion_factor(spec)!r}",
            f"thresholds {fmt(spec.thresholds)}",
            f"levels {fmt(spec.levels)}",
        ]
    ) + "\n"


def parse_table(text: str) -> QuantizerSpec:
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        fields[key] = rest.split()
    return QuantizerSpec(
        b=int(fields["b"][0]),
        kind=fields["kind"][0],
        thresholds=np.array([float(x) for x in fields["thresholds"]]),
        levels=np.array([float(x) for x in fields["levels"]]),
    )


def _check_bits(b: int) -> None:
    if not 1 <= b <= MAX_BITS:
        raise ValueError(f"resolution must be 1..{MAX_BITS} bits, got {b}")


def _uniform_grid(b: int, step: float) -> tuple[np.ndarray, np.ndarray]:
    n = 1 << b
    levels = (np.arange(n) - (n - 1) / 2.0) * step
    thresholds = (np.arange(1, n) - n / 2.0) * step
    return thresholds, levels


def _mse(thresholds: np.ndarray, levels: np.ndarray) -> float:
    m0, m1, m2 = _cell_moments(thresholds)
    return float(np.sum(m2 - 2.0 * levels * m1 + levels * levels * m0))


def design_uniform(b: int) -> QuantizerSpec:
    """Mid-rise uniform quantizer with the MSE-optimal step for N(0,1) input."""
    _check_bits(b)
    res = minimize_scalar(
        lambda d: _mse(*_uniform_grid(b, d)),
        bounds=(1e-4, 4.0),
        method="bounded",
        options={"xatol": 1e-12, "maxiter": 500},
    )
    thresholds, levels = _uniform_grid(b, float(res.x))
    return QuantizerSpec(b, "uniform", thresholds, levels)


def _conditional_means(thresholds: np.ndarray) -> np.ndarray:
    m0, m1, _ = _cell_moments(thresholds)
    return m1 / m0


def _lloyd_sweep(levels: np.ndarray) -> np.ndarray:
    new = _conditional_means(0.5 * (levels[1:] + levels[:-1]))
    return 0.5 * (new - new[::-1])


def _newton_step(thresholds: np.ndarray) -> np.ndarray:
    """Newton update for t_i = (l_i + l_{i+1}) / 2 with l the cell centroids."""
    m0, m1, _ = _cell_moments(thresholds)
    lv = m1 / m0
    phi = _pdf(thresholds)
    resid = thresholds - 0.5 * (lv[:-1] + lv[1:])
    # d l_i / d t_i (upper edge of cell i) and d l_{i+1} / d t_i (lower edge of cell i+1)
    d_upper = phi * (thresholds - lv[:-1]) / m0[:-1]
    d_lower = phi * (lv[1:] - thresholds) / m0[1:]
    n = thresholds.size
    jac = np.zeros((n, n))
    jac[np.arange(n), np.arange(n)] = 1.0 - 0.5 * (d_upper + d_lower)
    jac[np.arange(1, n), np.arange(n - 1)] = -0.5 * d_lower[:-1]
    jac[np.arange(n - 1), np.arange(1, n)] = -0.5 * d_upper[1:]
    return thresholds - np.linalg.solve(jac, resid)


def design_lloyd_max(b: int) -> QuantizerSpec:
    """Lloyd-Max (minimum-MSE) quantizer for a standard Gaussian.

    Starts from the MSE-optimal uniform grid and runs Lloyd sweeps
    (centroid levels, midpoint thresholds). Plain sweeps converge linearly
    and need ~10^5 sweeps at b = 8, so once inside the basin the same
    fixed-point conditions are finished off with Newton steps.
    """
    _check_bits(b)
    levels = _conditional_means(design_uniform(b).thresholds)
    moved = np.inf
    for sweep in range(LLOYD_MAX_SWEEPS):
        if sweep >= LLOYD_WARMUP:
            t = _newton_step(0.5 * (levels[1:] + levels[:-1]))
            if np.all(np.diff(t) > 0):
                new = _conditional_means(t)
                new = 0.5 * (new - new[::-1])
            else:
                new = _lloyd_sweep(levels)
        else:
            new = _lloyd_sweep(levels)
        moved = np.max(np.abs(new - levels))
        levels = new
        if moved < LLOYD_STOP:
            break
    if moved >= LLOYD_TOL:
        raise NoConvergence(f"b={b}: last sweep moved levels by {moved:.3g}")
    thresholds = 0.5 * (levels[1:] + levels[:-1])
    return QuantizerSpec(b, "lloyd_max", thresholds, levels)


def quantize_vector(y, spec: QuantizerSpec, component_sigma: float) -> np.ndarray:
    """Quantize real and imaginary parts separately at the given input scale.

    ``component_sigma`` is the standard deviation of each real component; an
    array broadcasting against ``y`` (e.g. one value per antenna row) is
    accepted.
    """
    sigma = np.asarray(component_sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("component_sigma must be positive")
    y = np.asarray(y)
    inv = 1.0 / sigma
    re = spec(y.real * inv)
    im = spec(y.imag * inv)
    return sigma * (re + 1j * im)


def distortion_factor(spec: QuantizerSpec) -> float:
    """E[(Q(z) - z)^2] for z ~ N(0,1), integrated cell by cell in closed form."""
    return _mse(spec.thresholds, spec.levels)


def empirical_distortion(spec: QuantizerSpec, n_samples: int, rng: RngLike) -> float:
    z = as_generator(rng).standard_normal(n_samples)
    return float(np.mean((spec(z) - z) ** 2))


@dataclass(frozen=True)
class AqnmParams:
    """Resolution, distortion factor and Bussgang gain of the linear model."""

    b: float
    rho: float

    @property
    def alpha(self) -> float:
        return 1.0 - self.rho

    @property
    def full_precision(self) -> bool:
        return math.isinf(self.b)


def aqnm_params(b) -> AqnmParams:
    """Tabulated rho for b <= 5, pi*sqrt(3)/2 * 2^(-2b) above, 0 for b = inf."""
    if b is None or (isinstance(b, float) and math.isinf(b)):
        return AqnmParams(math.inf, 0.0)
    if b != int(b) or b < 1:
        raise ValueError(f"resolution must be a positive integer or inf, got {b}")
    b = int(b)
    if b in TABLE_RHO:
        return AqnmParams(b, TABLE_RHO[b])
    return AqnmParams(b, math.pi * math.sqrt(3.0) / 2.0 * 2.0 ** (-2 * b))


def estimate_bussgang(y_samples, yq_samples) -> np.ndarray:
    """Sample estimate of B = R_{yq y} R_{yy}^{-1}.

    Both inputs are ``N x S`` arrays holding S draws of the N-vector in columns.
    """
    y = np.asarray(y_samples)
    yq = np.asarray(yq_samples)
    if y.shape != yq.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {yq.shape}")
    n, s = y.shape
    if s < 10 * n:
        raise ValueError(f"need at least {10 * n} samples, got {s}")
    r_yq_y = yq @ hermitian(y) / s
    r_yy_inv = gram_inverse(hermitian(y) / np.sqrt(s))
    return r_yq_y @ r_yy_inv
