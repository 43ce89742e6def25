"""Monte Carlo BER engine, experiment presets and CSV output.

Every trial draws one channel and pushes ``symbols_per_channel`` symbol
vectors through modulate -> channel -> ADC -> ZF -> slicer. Trial ``t`` of SNR
point ``s`` always uses ``RngStream(master_seed, t, (s,))``, and the stopping
rule is applied by scanning trials in index order, so totals do not depend on
how many worker processes computed them.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from qmimo import __version__
from qmimo.analytics import (
    BerQuery,
    Unreachable,
    ber_degradation,
    ber_floor,
    ber_mqam_full,
    ber_mqam_twoterm,
)
from qmimo.channel import LinkParams, draw_channel, transmit
from qmimo.detector import detect, zf_matrix, zf_matrix_quantized
from qmimo.modem import constellation, count_bit_errors, demodulate_hard, modulate
from qmimo.numerics import RngStream, SingularGram
from qmimo.quantizer import QuantizerSpec, aqnm_params, design_lloyd_max, design_uniform, quantize_vector

log = logging.getLogger(__name__)

WORKERS_ENV = "QMIMO_WORKERS"
QUANTIZER_KINDS = ("uniform", "lloyd_max", "none")
AGC_MODES = ("antenna", "analytic", "empirical")
TRIALS_PER_TASK = 8


class ConfigError(ValueError):
    pass


class IoFailure(OSError):
    pass


def _parse_bits(b) -> float:
    if isinstance(b, str):
        b = b.strip().lower()
        if b in ("inf", "infinity", "full"):
            return math.inf
        b = int(b)
    return math.inf if b is None or (isinstance(b, float) and math.isinf(b)) else int(b)


@dataclass(frozen=True)
class SimConfig:
    M: int
    N: int
    K: int
    b: float
    quantizer_kind: str
    snr_grid: tuple[float, ...]
    symbols_per_channel: int = 100
    min_bit_errors: int = 500
    max_bits: int = 10**9
    master_seed: int = 0
    agc_mode: str = "antenna"

    def __post_init__(self):
        object.__setattr__(self, "b", _parse_bits(self.b))
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        if self.M not in (4, 16, 64):
            raise ConfigError(f"M must be 4, 16 or 64, got {self.M}")
        if not self.N >= self.K >= 1:
            raise ConfigError(f"need N >= K >= 1, got N={self.N}, K={self.K}")
        if self.quantizer_kind not in QUANTIZER_KINDS:
            raise ConfigError(f"quantizer_kind must be one of {QUANTIZER_KINDS}")
        if (self.quantizer_kind == "none") != math.isinf(self.b):
            raise ConfigError("quantizer 'none' goes with b = inf and only with it")
        if not math.isinf(self.b) and not 1 <= self.b <= 8:
            raise ConfigError(f"b must be 1..8 or inf, got {self.b}")
        if not all(math.isfinite(s) for s in self.snr_grid):
            raise ConfigError("SNR grid values must be finite")
        if self.agc_mode not in AGC_MODES:
            raise ConfigError(f"agc_mode must be one of {AGC_MODES}")
        if self.symbols_per_channel < 1 or self.max_bits < 1 or self.min_bit_errors < 1:
            raise ConfigError("symbol, bit and error budgets must be positive")
        if self.min_bit_errors < 100:
            warnings.warn(
                f"min_bit_errors={self.min_bit_errors} gives loose confidence intervals",
                stacklevel=3,
            )

    @property
    def bits_per_symbol(self) -> int:
        return self.M.bit_length() - 1

    @property
    def bits_per_trial(self) -> int:
        return self.symbols_per_channel * self.K * self.bits_per_symbol

    def gamma0(self, snr_db_per_bit: float) -> float:
        """Per-user SNR gamma0 = (Eb/N0) * log2(M)."""
        return 10.0 ** (snr_db_per_bit / 10.0) * self.bits_per_symbol

    def link(self, snr_index: int) -> LinkParams:
        return LinkParams.from_gamma0(self.N, self.K, self.gamma0(self.snr_grid[snr_index]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["b"] = "inf" if math.isinf(self.b) else int(self.b)
        d["snr_grid"] = list(self.snr_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


@dataclass(frozen=True)
class TrialResult:
    bits_sent: int
    bit_errors: int
    redraws: int = 0


@dataclass
class BerPoint:
    snr_db_per_bit: float
    gamma0: float
    gamma_q0: float
    bits_sent: int
    bit_errors: int
    ber_numerical: float
    ber_analytical_full: float
    ber_analytical_twoterm: float
    channel_draws: int
    redraws: int = 0
    saturated: bool = False


CSV_COLUMNS = tuple(f.name for f in fields(BerPoint))


@dataclass
class BerCurve:
    config: SimConfig
    points: list[BerPoint] = field(default_factory=list)


@lru_cache(maxsize=None)
def quantizer_for(kind: str, b: int) -> QuantizerSpec:
    if kind == "lloyd_max":
        return design_lloyd_max(b)
    if kind == "uniform":
        return design_uniform(b)
    raise ValueError(f"no quantizer of kind {kind!r}")


def adc_input_sigma(mode: str, H: np.ndarray, y: np.ndarray, link: LinkParams):
    """Per-component standard deviation the ADCs normalize by.

    ``antenna``: each antenna's own variance for this channel draw,
    sqrt((sx2 * sum_k |h_ik|^2 + sn2) / 2), returned as an N x 1 column.
    ``analytic``: the channel-averaged sqrt((K sx2 + sn2) / 2) for every antenna.
    ``empirical``: RMS of the whole received block.
    """
    if mode == "antenna":
        power = link.sigma_x2 * np.sum(np.abs(H) ** 2, axis=1, keepdims=True) + link.sigma_n2
        return np.sqrt(power / 2.0)
    if mode == "analytic":
        return link.component_sigma
    if mode == "empirical":
        return math.sqrt(float(np.mean(np.abs(y) ** 2)) / 2.0)
    raise ValueError(f"unknown AGC mode {mode!r}")


def run_trial(cfg: SimConfig, snr_index: int, trial_index: int) -> TrialResult:
    """One channel realization and its block of symbol vectors."""
    gen = RngStream(cfg.master_seed, trial_index, (snr_index,)).generator()
    link = cfg.link(snr_index)
    quantized = not math.isinf(cfg.b)
    params = aqnm_params(cfg.b)
    redraws = 0
    while True:
        H = draw_channel(link, gen)
        try:
            det = zf_matrix_quantized(H, params) if quantized else zf_matrix(H)
            break
        except SingularGram:
            redraws += 1
            log.warning("singular Gram matrix, redrawing (snr %d, trial %d)", snr_index, trial_index)

    c = constellation(cfg.M)
    bits = gen.integers(0, 2, size=cfg.bits_per_trial, dtype=np.uint8)
    x = modulate(bits, c).reshape(cfg.K, cfg.symbols_per_channel)
    y = transmit(H, x, link, gen)
    if quantized:
        sigma = adc_input_sigma(cfg.agc_mode, H, y, link)
        y = quantize_vector(y, quantizer_for(cfg.quantizer_kind, int(cfg.b)), sigma)
    rx = demodulate_hard(detect(det, y), c)
    return TrialResult(cfg.bits_per_trial, count_bit_errors(bits, rx), redraws)


def _run_trials(cfg: SimConfig, snr_index: int, start: int, stop: int) -> list[TrialResult]:
    return [run_trial(cfg, snr_index, t) for t in range(start, stop)]


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _trial_stream(cfg: SimConfig, snr_index: int, pool: ProcessPoolExecutor | None, workers: int):
    """Yield TrialResults in trial-index order, computing ahead in parallel."""
    start = 0
    while True:
        if pool is None:
            yield from _run_trials(cfg, snr_index, start, start + TRIALS_PER_TASK)
            start += TRIALS_PER_TASK
            continue
        futures = [
            pool.submit(_run_trials, cfg, snr_index, s, s + TRIALS_PER_TASK)
            for s in range(start, start + workers * TRIALS_PER_TASK * 2, TRIALS_PER_TASK)
        ]
        start += workers * TRIALS_PER_TASK * 2
        for fut in futures:
            yield from fut.result()


def _analytical(cfg: SimConfig, gamma0: float) -> tuple[float, float, float]:
    params = aqnm_params(cfg.b)
    if cfg.N == cfg.K:
        nan = float("nan")
        return nan, nan, nan
    q = BerQuery(cfg.M, cfg.N, cfg.K, params, gamma0)
    return q.gamma_q0, ber_mqam_full(q), ber_mqam_twoterm(q)


def run_snr_point(cfg: SimConfig, snr_index: int, pool=None, workers: int = 1) -> BerPoint:
    bits = errors = draws = redraws = 0
    for res in _trial_stream(cfg, snr_index, pool, workers):
        bits += res.bits_sent
        errors += res.bit_errors
        redraws += res.redraws
        draws += 1
        if errors >= cfg.min_bit_errors or bits >= cfg.max_bits:
            break
    snr_db = cfg.snr_grid[snr_index]
    gamma0 = cfg.gamma0(snr_db)
    gq, full, two = _analytical(cfg, gamma0)
    return BerPoint(
        snr_db_per_bit=snr_db,
        gamma0=gamma0,
        gamma_q0=gq,
        bits_sent=bits,
        bit_errors=errors,
        ber_numerical=errors / bits,
        ber_analytical_full=full,
        ber_analytical_twoterm=two,
        channel_draws=draws,
        redraws=redraws,
        saturated=errors < cfg.min_bit_errors,
    )


def run_ber_sweep(cfg: SimConfig, workers: int | None = None) -> BerCurve:
    """Simulate every SNR point until the error target or bit budget is met."""
    workers = default_workers() if workers is None else max(1, int(workers))
    curve = BerCurve(cfg)
    if workers == 1:
        for s in range(len(cfg.snr_grid)):
            curve.points.append(run_snr_point(cfg, s))
        return curve
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for s in range(len(cfg.snr_grid)):
            curve.points.append(run_snr_point(cfg, s, pool, workers))
    return curve


def binomial_halfwidth(errors: int, bits: int, z: float = 3.0) -> float:
    """z-sigma normal-approximation half-width of a BER estimate."""
    p = errors / bits
    return z * math.sqrt(max(p * (1.0 - p), 0.0) / bits)


# --- CSV -------------------------------------------------------------------

SNR_NOTE = "snr_db_per_bit is Eb/N0 per user in dB; gamma0 = 10^(snr_db_per_bit/10) * log2(M)"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def emit_csv(curve: BerCurve, path) -> None:
    """Write comment lines (version, config, SNR convention), a header and one row per point."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# qmimo {__version__}\n")
            fh.write("# config: " + json.dumps(curve.config.to_dict(), sort_keys=True) + "\n")
            fh.write(f"# {SNR_NOTE}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for pt in curve.points:
                writer.writerow([_fmt(getattr(pt, c)) for c in CSV_COLUMNS])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> BerCurve:
    config = None
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("# config: "):
                config = SimConfig.from_dict(json.loads(line[len("# config: "):]))
            elif not line.startswith("#"):
                rows.append(line)
    reader = csv.DictReader(rows)
    kinds = {f.name: f.type for f in fields(BerPoint)}
    points = []
    for row in reader:
        vals = {}
        for name, text in row.items():
            kind = kinds[name]
            if kind in ("int", int):
                vals[name] = int(text)
            elif kind in ("bool", bool):
                vals[name] = text == "1"
            else:
                vals[name] = float(text)
        points.append(BerPoint(**vals))
    return BerCurve(config, points)


PLOT_STUB = '''"""Plot numerical vs analytical BER from {csv_name} (generated by qmimo)."""
import csv

import matplotlib.pyplot as plt

with open({csv_name!r}) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
snr = [float(r["snr_db_per_bit"]) for r in rows]
plt.semilogy(snr, [float(r["ber_numerical"]) or float("nan") for r in rows], "o", label="Monte Carlo")
plt.semilogy(snr, [float(r["ber_analytical_full"]) for r in rows], "-", label="closed form")
plt.xlabel("Eb/N0 per user [dB]")
plt.ylabel("BER")
plt.grid(True, which="both")
plt.legend()
plt.show()
'''


def emit_plot_stub(csv_path) -> Path:
    csv_path = Path(csv_path)
    out = csv_path.with_name(csv_path.stem + "_plot.py")
    try:
        out.write_text(PLOT_STUB.format(csv_name=csv_path.name))
    except OSError as exc:
        raise IoFailure(f"cannot write {out}: {exc}") from exc
    return out


# --- presets ---------------------------------------------------------------

# Reference BER floors (SNR -> infinity, N=100, K=10) keyed by (M, b):
# (closed form, Monte Carlo at 100 dB); 0.0 means no errors were observed.
REFERENCE_TABLE2 = {
    (4, 1): (4.76e-5, 4.8e-5),
    (4, 2): (1.4e-14, 0.0),
    (4, 3): (1.1e-36, 0.0),
    (4, 4): (2.47e-74, 0.0),
    (16, 1): (2.84e-2, 3.52e-2),
    (16, 2): (1.8e-4, 2.31e-4),
    (16, 3): (8.5e-12, 0.0),
    (16, 4): (1.91e-30, 0.0),
    (64, 1): (1.14e-1, 1.41e-1),
    (64, 2): (2.13e-2, 2.85e-2),
    (64, 3): (1.83e-4, 3.69e-4),
    (64, 4): (6.59e-11, 2.33e-9),
}

FLOOR_SNR_DB = 100.0
SIMULATED_FLOOR_MIN = 1e-6


@dataclass
class Table2Cell:
    M: int
    b: int
    analytical: float
    numerical: float | None
    bit_errors: int
    bits_sent: int
    reference_analytical: float
    reference_numerical: float

    @property
    def observed_zero(self) -> bool:
        return self.numerical is not None and self.bit_errors == 0


def floor_config(M: int, b: int, *, N=100, K=10, min_bit_errors=500, max_bits=10**8, seed=0) -> SimConfig:
    return SimConfig(
        M=M, N=N, K=K, b=b, quantizer_kind="lloyd_max", snr_grid=(FLOOR_SNR_DB,),
        min_bit_errors=min_bit_errors, max_bits=max_bits, master_seed=seed,
    )


def preset_table2(
    *,
    simulate: bool = True,
    min_bit_errors: int = 500,
    max_bits: int = 10**8,
    zero_cell_bits: int = 10**6,
    seed: int = 0,
    workers: int | None = None,
    cells: Iterable[tuple[int, int]] | None = None,
) -> list[Table2Cell]:
    """BER floors for QPSK/16-QAM/64-QAM at b = 1..4, N=100, K=10.

    Cells whose closed-form floor is below 1e-6 are simulated only up to
    ``zero_cell_bits`` bits, so their numerical entry is normally
    ``0 observed`` under that budget.
    """
    out = []
    for M, b in cells or REFERENCE_TABLE2:
        analytical = ber_floor(M, 100, 10, aqnm_params(b))
        numerical, errors, bits = None, 0, 0
        if simulate:
            budget = max_bits if analytical >= SIMULATED_FLOOR_MIN else zero_cell_bits
            cfg = floor_config(M, b, min_bit_errors=min_bit_errors, max_bits=budget, seed=seed)
            pt = run_ber_sweep(cfg, workers).points[0]
            numerical, errors, bits = pt.ber_numerical, pt.bit_errors, pt.bits_sent
        ref_a, ref_n = REFERENCE_TABLE2[(M, b)]
        out.append(Table2Cell(M, b, analytical, numerical, errors, bits, ref_a, ref_n))
    return out


def format_table2(cells: Sequence[Table2Cell]) -> str:
    names = {4: "QPSK", 16: "16-QAM", 64: "64-QAM"}
    lines = [f"{'mod':<7} {'b':>2} {'analytical':>11} {'numerical':>24} {'ref.anal':>9} {'ref.num':>9}"]
    for c in cells:
        if c.numerical is None:
            num = "not simulated"
        elif c.bit_errors == 0:
            num = f"0 observed / {c.bits_sent:.0e} bits"
        else:
            num = f"{c.numerical:.3g} ({c.bit_errors} err)"
        lines.append(
            f"{names[c.M]:<7} {c.b:>2} {c.analytical:>11.3g} {num:>24} "
            f"{c.reference_analytical:>9.3g} {c.reference_numerical:>9.3g}"
        )
    return "\n".join(lines) + "\n"


def emit_table2_csv(cells: Sequence[Table2Cell], path) -> None:
    cols = ["M", "b", "analytical", "numerical", "bit_errors", "bits_sent",
            "reference_analytical", "reference_numerical"]
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# qmimo {__version__}\n# BER floors at N=100, K=10; numerical at {FLOOR_SNR_DB} dB\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for c in cells:
                w.writerow([_fmt(v) if v is not None else "" for v in (getattr(c, k) for k in cols)])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


@dataclass
class DegradationRow:
    M: int
    N: int
    K: int
    b: int
    target: float
    degradation_db: float | None

    @property
    def reachable(self) -> bool:
        return self.degradation_db is not None


def preset_degradation(
    orders=(4, 16), bits=(1, 2, 3, 4), antennas=(100, 200, 400), K: int = 10, target: float = 1e-4
) -> list[DegradationRow]:
    rows = []
    for M in orders:
        for N in antennas:
            for b in bits:
                try:
                    deg = ber_degradation(M, N, K, b, target)
                except Unreachable:
                    deg = None
                rows.append(DegradationRow(M, N, K, b, target, deg))
    return rows


def emit_degradation_csv(rows: Sequence[DegradationRow], path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# qmimo {__version__}\n# extra SNR (dB) over full precision to reach the target BER\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["M", "N", "K", "b", "target", "degradation_db", "reachable"])
            for r in rows:
                deg = "" if r.degradation_db is None else _fmt(r.degradation_db)
                w.writerow([r.M, r.N, r.K, r.b, _fmt(r.target), deg, _fmt(r.reachable)])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
