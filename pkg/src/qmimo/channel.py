"""Rayleigh channel draws and the received-signal model y = Hx + n."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qmimo.numerics import RngLike, as_generator, cgauss_matrix


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LinkParams:
    """Array size, user count and per-user symbol / noise powers."""

    N: int
    K: int
    sigma_x2: float = 1.0
    sigma_n2: float = 1.0

    def __post_init__(self):
        if not (self.N >= self.K >= 1):
            raise ValueError(f"need N >= K >= 1, got N={self.N}, K={self.K}")
        if not (self.sigma_x2 > 0 and self.sigma_n2 > 0):
            raise ValueError("symbol and noise powers must be positive")

    @classmethod
    def from_gamma0(cls, N: int, K: int, gamma0: float, sigma_x2: float = 1.0) -> "LinkParams":
        return cls(N, K, sigma_x2, sigma_x2 / gamma0)

    @property
    def gamma0(self) -> float:
        return self.sigma_x2 / self.sigma_n2

    @property
    def rx_power(self) -> float:
        """Mean received power per antenna, K*sigma_x2 + sigma_n2."""
        return self.K * self.sigma_x2 + self.sigma_n2

    @property
    def component_sigma(self) -> float:
        """Standard deviation of each real component of a received sample."""
        return math.sqrt(self.rx_power / 2.0)


def draw_channel(p: LinkParams, rng: RngLike) -> np.ndarray:
    """N x K matrix with i.i.d. CN(0, 1) entries."""
    return cgauss_matrix(p.N, p.K, 1.0, rng)


def transmit(H: np.ndarray, x, p: LinkParams, rng: RngLike) -> np.ndarray:
    """Return ``H @ x + n`` with fresh CN(0, sigma_n2) noise.

    ``x`` is a K-vector or a K x S block of S symbol vectors sharing ``H``.
    """
    x = np.asarray(x)
    if H.shape != (p.N, p.K) or x.shape[0] != p.K or x.ndim > 2:
        raise DimensionMismatch(f"H {H.shape}, x {x.shape}, link N={p.N} K={p.K}")
    cols = 1 if x.ndim == 1 else x.shape[1]
    noise = cgauss_matrix(p.N, cols, p.sigma_n2, as_generator(rng))
    if x.ndim == 1:
        noise = noise[:, 0]
    return H @ x + noise
