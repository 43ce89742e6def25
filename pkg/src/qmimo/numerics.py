"""Complex linear algebra, seeded random streams and log-domain combinatorics.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; nothing
here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import gammaln

__all__ = [
    "SingularGram",
    "RngStream",
    "as_generator",
    "cgauss_matrix",
    "hermitian",
    "gram_inverse",
    "log_binomial",
]

# Gram matrices with a larger condition number are treated as rank deficient.
MAX_GRAM_CONDITION = 1e12


class SingularGram(np.linalg.LinAlgError):
    """H^H H is numerically rank deficient; the channel draw is degenerate."""


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream.

    The generator for ``(master_seed, substream, stream_index)`` is derived
    through ``numpy.random.SeedSequence`` spawn keys, so a trial's draws never
    depend on which worker runs it or how many trials ran before it.
    """

    master_seed: int
    stream_index: int
    substream: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(*map(int, self.substream), int(self.stream_index)),
        )
        return np.random.Generator(np.random.PCG64(seq))


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def cgauss_matrix(rows: int, cols: int, variance: float, rng: RngLike) -> np.ndarray:
    """Draw a ``rows x cols`` matrix of i.i.d. CN(0, variance) entries.

    Real and imaginary parts are independent N(0, variance/2).
    """
    gen = as_generator(rng)
    scale = np.sqrt(variance / 2.0)
    parts = gen.standard_normal((2, rows, cols))
    return scale * (parts[0] + 1j * parts[1])


def hermitian(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def gram_inverse(H: np.ndarray) -> np.ndarray:
    """Return ``(H^H H)^{-1}`` via a Cholesky factorization.

    Raises
    ------
    SingularGram
        If ``H`` has more columns than rows, or the Gram matrix is not
        numerically positive definite (condition number above 1e12).
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] < H.shape[1]:
        raise SingularGram(f"need a tall matrix, got shape {H.shape}")
    gram = hermitian(H) @ H
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= 0 or eig[-1] / eig[0] > MAX_GRAM_CONDITION:
        raise SingularGram(f"Gram condition estimate {eig[-1] / max(eig[0], 1e-300):.3g}")
    try:
        factor = cho_factor(gram, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise SingularGram(str(exc)) from exc
    inv = cho_solve(factor, np.eye(gram.shape[0], dtype=gram.dtype), check_finite=False)
    # cho_solve leaves O(eps) asymmetry; project back onto Hermitian matrices
    return 0.5 * (inv + hermitian(inv))


def log_binomial(n, k):
    """Natural log of the binomial coefficient C(n, k); broadcasts over arrays."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(k < 0) or np.any(k > n):
        raise ValueError("log_binomial requires 0 <= k <= n")
    out = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    return out if out.ndim else float(out)
