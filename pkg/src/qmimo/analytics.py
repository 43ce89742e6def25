"""Closed-form BER of ZF-detected square M-QAM over i.i.d. Rayleigh MIMO with
few-bit ADCs.

The quantizer enters only through the effective SNR scale
``gamma_q0 = sx2 / (sn2 + (1 - alpha)/alpha * (K sx2 + sn2))``; the
post-ZF SINR of a stream is that scale times a Gamma(D+1, 1) variate with
``D = N - K``. Averaging the Gray-coded M-QAM bit error probability over
that distribution gives a finite sum of terms B(i), evaluated here in the
log domain because the binomials reach C(180, 90) ~ 1e53 at N = 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from qmimo.numerics import log_binomial
from qmimo.quantizer import AqnmParams, aqnm_params

SUPPORTED_ORDERS = (4, 16, 64)

# bracket on gamma0 used when inverting BER curves
SNR_BRACKET = (1e-6, 1e12)
BISECTION_ITERATIONS = 200
SNR_RTOL = 1e-6


class Unreachable(ValueError):
    """The requested BER lies at or below what the system can reach."""


class InfinitePrecision(ValueError):
    """Full-precision receivers have no BER floor."""


def gamma_q0(sigma_x2: float, sigma_n2: float, K: int, alpha: float) -> float:
    """Effective SNR scale of a quantized ZF receiver."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return sigma_x2 / (sigma_n2 + (1.0 - alpha) / alpha * (K * sigma_x2 + sigma_n2))


def _gamma_q0_from_snr(gamma0: float, K: int, alpha: float) -> float:
    # same expression with sigma_x2 = 1, written so gamma0 in {0, inf} is exact
    if gamma0 == 0:
        return 0.0
    inv = 1.0 / gamma0
    denom = inv + (1.0 - alpha) / alpha * (K + inv)
    return math.inf if denom == 0 else 1.0 / denom


@dataclass(frozen=True)
class BerQuery:
    M: int
    N: int
    K: int
    params: AqnmParams
    gamma0: float

    def __post_init__(self):
        if self.M not in SUPPORTED_ORDERS:
            raise ValueError(f"M must be one of {SUPPORTED_ORDERS}")
        if not self.N > self.K >= 1:
            raise ValueError(f"need N > K >= 1, got N={self.N}, K={self.K}")
        if not self.gamma0 >= 0:
            raise ValueError("gamma0 must be non-negative")

    @property
    def D(self) -> int:
        return self.N - self.K

    @property
    def gamma_q0(self) -> float:
        return _gamma_q0_from_snr(self.gamma0, self.K, self.params.alpha)


def log_b_term(i: int, M: int, D: int, gamma: float) -> float:
    """log B(i): the Gamma(D+1)-averaged Q-function tail for PAM distance 2i+1."""
    if math.isinf(gamma):
        return -math.inf
    c = 3.0 * (2 * i + 1) ** 2 * gamma
    d = 2.0 * (M - 1)
    mu = math.sqrt(c / (d + c))
    # 1 - mu without cancellation as mu -> 1
    one_minus = d / ((d + c) * (1.0 + mu))
    j = np.arange(D + 1)
    series = logsumexp(log_binomial(D + j, j) + j * math.log(0.5 * (1.0 + mu)))
    return (D + 1) * math.log(0.5 * one_minus) + float(series)


def b_term(i: int, M: int, D: int, gamma: float) -> float:
    return math.exp(log_b_term(i, M, D, gamma))


def _check_order(M: int) -> tuple[int, int]:
    if M not in SUPPORTED_ORDERS:
        raise ValueError(f"M must be one of {SUPPORTED_ORDERS}, got {M}")
    side = math.isqrt(M)
    return side, side.bit_length() - 1


def mqam_ber(M: int, D: int, gamma: float) -> float:
    """Full finite-sum BER of Gray M-QAM at SNR scale ``gamma`` and diversity D+1."""
    side, log_side = _check_order(M)
    total = 0.0
    for k in range(1, log_side + 1):
        step = 1 << (k - 1)
        # (1 - 2^-k) * sqrt(M) terms, exact for power-of-two sqrt(M)
        for i in range(side - (side >> k)):
            sign = -1 if (i * step // side) % 2 else 1
            # floor(i 2^(k-1) / sqrt(M) + 1/2) in integer arithmetic
            rounded = (2 * i * step + side) // (2 * side)
            total += sign * (step - rounded) * b_term(i, M, D, gamma)
    ber = 2.0 / (side * log_side) * total
    return min(max(ber, 0.0), 1.0)


def mqam_ber_twoterm(M: int, D: int, gamma: float) -> float:
    """Keep only the B(0) and B(1) terms of the full sum."""
    side, log_side = _check_order(M)
    norm = side * log_side
    ber = 2.0 * (side - 1) / norm * b_term(0, M, D, gamma)
    if side > 2:
        ber += 2.0 * (side - 2) / norm * b_term(1, M, D, gamma)
    return min(max(ber, 0.0), 1.0)


def ber_mqam_full(q: BerQuery) -> float:
    return mqam_ber(q.M, q.D, q.gamma_q0)


def ber_mqam_twoterm(q: BerQuery) -> float:
    return mqam_ber_twoterm(q.M, q.D, q.gamma_q0)


def floor_gamma(K: int, params: AqnmParams) -> float:
    """Limit of gamma_q0 as transmit power grows without bound."""
    if params.full_precision or params.rho == 0:
        raise InfinitePrecision("no BER floor without quantization")
    return params.alpha / ((1.0 - params.alpha) * K)


def ber_floor(M: int, N: int, K: int, params: AqnmParams) -> float:
    return mqam_ber(M, N - K, floor_gamma(K, params))


def snr_for_ber(M: int, N: int, K: int, params: AqnmParams, target: float) -> float:
    """gamma0 at which the full-sum BER equals ``target`` (log-domain bisection)."""
    ber = lambda g0: ber_mqam_full(BerQuery(M, N, K, params, g0))  # noqa: E731
    lo, hi = (math.log(v) for v in SNR_BRACKET)
    floor = 0.0 if params.full_precision else ber_floor(M, N, K, params)
    if target <= floor or target <= ber(math.exp(hi)):
        raise Unreachable(f"BER {target:.3g} not reachable (floor {floor:.3g})")
    if target >= ber(math.exp(lo)):
        raise ValueError(f"target {target:.3g} exceeds the BER at the bottom of the SNR bracket")
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        value = ber(math.exp(mid))
        if abs(value - target) <= SNR_RTOL * 1e-3 * target:
            return math.exp(mid)
        if value > target:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def ber_degradation(M: int, N: int, K: int, b, target: float = 1e-4) -> float:
    """Extra SNR in dB a b-bit receiver needs over full precision to hit ``target``."""
    params = aqnm_params(b)
    if params.full_precision:
        return 0.0
    ref = snr_for_ber(M, N, K, aqnm_params(math.inf), target)
    return 10.0 * math.log10(snr_for_ber(M, N, K, params, target) / ref)
