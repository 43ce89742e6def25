"""Square M-QAM with per-axis binary-reflected Gray labels and hard slicing."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64)


class LengthMismatch(ValueError):
    pass


def _gray(m: np.ndarray) -> np.ndarray:
    return m ^ (m >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy square QAM.

    A symbol carries ``bits_per_symbol`` bits: the first half label the
    in-phase PAM level and the second half the quadrature level, MSB first.
    ``points[i]`` is the symbol whose bit label, read as an integer, is ``i``;
    ``gray_labels[i]`` holds those bits.
    """

    M: int
    bits_per_symbol: int = field(init=False)
    points: np.ndarray = field(init=False, repr=False)
    gray_labels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.M not in SUPPORTED_ORDERS:
            raise ValueError(f"M must be one of {SUPPORTED_ORDERS}, got {self.M}")
        bps = int(self.M).bit_length() - 1
        half = bps // 2
        side = 1 << half
        # gray label -> level index on one axis
        level_of_label = np.empty(side, dtype=np.int64)
        level_of_label[_gray(np.arange(side))] = np.arange(side)
        labels = np.arange(self.M)
        i_level = level_of_label[labels >> half]
        q_level = level_of_label[labels & (side - 1)]
        amps = self.pam_levels(side)
        points = (amps[i_level] + 1j * amps[q_level]) / self._norm(self.M)
        bits = (labels[:, None] >> np.arange(bps - 1, -1, -1)) & 1
        object.__setattr__(self, "bits_per_symbol", bps)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "gray_labels", bits.astype(np.uint8))
        object.__setattr__(self, "_level_of_label", level_of_label)
        object.__setattr__(self, "_label_of_level", _gray(np.arange(side)))

    @staticmethod
    def pam_levels(side: int) -> np.ndarray:
        """Odd-integer amplitudes -(side-1), ..., side-1 (unnormalized)."""
        return np.arange(-(side - 1), side, 2, dtype=float)

    @staticmethod
    def _norm(M: int) -> float:
        # mean |point|^2 of the odd-integer grid is 2(M-1)/3
        return np.sqrt(2.0 * (M - 1) / 3.0)

    @property
    def side(self) -> int:
        return 1 << (self.bits_per_symbol // 2)

    @property
    def scale(self) -> float:
        """Factor mapping unit-energy amplitudes back to the odd-integer grid."""
        return self._norm(self.M)


@lru_cache(maxsize=None)
def constellation(M: int) -> Constellation:
    return Constellation(M)


def _as_bits(bits) -> np.ndarray:
    return np.asarray(bits, dtype=np.uint8).ravel()


def modulate(bits, c: Constellation) -> np.ndarray:
    """Map a bit sequence onto constellation points, ``bits_per_symbol`` at a time."""
    b = _as_bits(bits)
    bps = c.bits_per_symbol
    if b.size % bps:
        raise LengthMismatch(f"{b.size} bits is not a multiple of {bps}")
    weights = 1 << np.arange(bps - 1, -1, -1)
    labels = b.reshape(-1, bps).astype(np.int64) @ weights
    return c.points[labels]


def _slice_axis(x: np.ndarray, c: Constellation) -> np.ndarray:
    side = c.side
    # level m occupies (2m - side, 2m + 2 - side] on the odd-integer grid, so
    # boundary points fall to the lower level
    t = np.clip(x * c.scale, -side, side)
    idx = np.ceil((t + side) / 2.0).astype(np.int64) - 1
    return np.clip(idx, 0, side - 1)


def demodulate_hard(symbols, c: Constellation) -> np.ndarray:
    """Nearest-point hard decision, returned as a flat bit array.

    Square QAM lets each axis be sliced independently. Inputs lying exactly on
    a decision boundary resolve to the lower amplitude level.
    """
    s = np.asarray(symbols, dtype=complex).ravel()
    half = c.bits_per_symbol // 2
    i_lab = c._label_of_level[_slice_axis(s.real, c)]
    q_lab = c._label_of_level[_slice_axis(s.imag, c)]
    labels = (i_lab << half) | q_lab
    return c.gray_labels[labels].ravel()


def count_bit_errors(tx, rx) -> int:
    """Hamming distance between two equal-length bit sequences."""
    a = _as_bits(tx)
    b = _as_bits(rx)
    if a.size != b.size:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))
