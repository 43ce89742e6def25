"""Zero-forcing detection with and without the quantizer gain correction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qmimo.analytics import gamma_q0
from qmimo.channel import DimensionMismatch, LinkParams
from qmimo.numerics import gram_inverse, hermitian
from qmimo.quantizer import AqnmParams


@dataclass(frozen=True, eq=False)
class DetectionMatrix:
    """``A`` (N x K) such that ``A^H H = I / alpha_used``."""

    A: np.ndarray
    alpha_used: float = 1.0


def zf_matrix(H: np.ndarray) -> DetectionMatrix:
    return DetectionMatrix(H @ gram_inverse(H), 1.0)


def zf_matrix_quantized(H: np.ndarray, params: AqnmParams) -> DetectionMatrix:
    """ZF matrix scaled by 1/alpha to undo the Bussgang gain of the ADCs."""
    alpha = params.alpha
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    base = zf_matrix(H)
    if alpha == 1.0:
        return base
    return DetectionMatrix(base.A / alpha, alpha)


def detect(det: DetectionMatrix, y) -> np.ndarray:
    """x_hat = A^H y for an N-vector or an N x S block."""
    y = np.asarray(y)
    if y.shape[0] != det.A.shape[0]:
        raise DimensionMismatch(f"y has {y.shape[0]} rows, A expects {det.A.shape[0]}")
    return hermitian(det.A) @ y


def post_detection_sinr(H: np.ndarray, p: LinkParams, params: AqnmParams) -> np.ndarray:
    """Per-user SINR gamma_q0 / [(H^H H)^{-1}]_kk."""
    scale = gamma_q0(p.sigma_x2, p.sigma_n2, p.K, params.alpha)
    return scale / np.real(np.diag(gram_inverse(H)))
