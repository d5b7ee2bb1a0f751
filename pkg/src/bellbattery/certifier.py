"""Confidence bounds on the success probability from work bits, and verdicts."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateCalibration, InvalidParameter
from .games import GameValues
from .kernels import beta_quantile
from .transducer import WorkRecord

METHODS = ("hoeffding", "azuma", "clopper-pearson", "wilson")
VERDICTS = ("none", "nonlocal", "post-quantum")


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter(f"alpha={alpha!r} must lie in (0, 1)")


def _check_counts(k, n):
    if n < 1:
        raise InvalidParameter("need n >= 1")
    if not 0 <= k <= n:
        raise InvalidParameter(f"k={k} outside [0, n={n}]")


def hoeffding_epsilon(n: int, alpha: float) -> float:
    """One-sided Hoeffding radius ``sqrt(ln(1/alpha) / (2n))`` for [0,1] variables."""
    _check_alpha(alpha)
    if n < 1:
        raise InvalidParameter("need n >= 1")
    return math.sqrt(math.log(1.0 / alpha) / (2.0 * n))


def hoeffding_lower(p_hat: float, n: int, alpha: float) -> float:
    return max(0.0, p_hat - hoeffding_epsilon(n, alpha))


def azuma_lower_bound(record: WorkRecord, alpha: float) -> float:
    """Lower bound on the time-averaged conditional success probability.

    Numerically identical to the Hoeffding bound; valid without the i.i.d.
    assumption because the centred work bits form a bounded martingale
    difference sequence.
    """
    if record.rounds < 1:
        raise InvalidParameter("empty work record")
    return hoeffding_lower(record.p_hat, record.rounds, alpha)


def clopper_pearson(k: int, n: int, alpha: float, sided: str = "two") -> tuple[float, float]:
    """Exact binomial interval; ``sided="one"`` gives one-sided bounds at level alpha."""
    _check_counts(k, n)
    _check_alpha(alpha)
    if sided not in ("one", "two"):
        raise InvalidParameter(f"sided must be 'one' or 'two', got {sided!r}")
    tail = alpha if sided == "one" else alpha / 2.0
    lo = 0.0 if k == 0 else beta_quantile(tail, k, n - k + 1)
    hi = 1.0 if k == n else beta_quantile(1.0 - tail, k + 1, n - k)
    return lo, hi


def clopper_pearson_lower(k, n, alpha: float, sided: str = "one") -> np.ndarray:
    """Vectorized Clopper-Pearson lower bounds over arrays of ``(k, n)``."""
    _check_alpha(alpha)
    k = np.asarray(k, dtype=np.int64)
    n = np.asarray(n, dtype=np.int64)
    k, n = np.broadcast_arrays(k, n)
    if np.any(n < 1) or np.any(k < 0) or np.any(k > n):
        raise InvalidParameter("need 0 <= k <= n and n >= 1")
    tail = alpha if sided == "one" else alpha / 2.0
    a = np.where(k == 0, 1, k).astype(np.float64)
    q = beta_quantile(np.full(k.shape, tail), a, (n - k + 1).astype(np.float64))
    return np.where(k == 0, 0.0, q)


# Acklam's rational approximation to the inverse normal CDF
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_quantile(p: float) -> float:
    """``Phi^{-1}(p)``: rational approximation plus one Halley correction step."""
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"normal quantile needs p in (0, 1), got {p!r}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def wilson(k: int, n: int, alpha: float) -> tuple[float, float]:
    _check_counts(k, n)
    _check_alpha(alpha)
    z = normal_quantile(1.0 - alpha / 2.0)
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = p + z2 / (2.0 * n)
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))
    # centre == half exactly at k = 0 and k = n; avoid a rounding residue
    lo = 0.0 if k == 0 else max(0.0, (centre - half) / denom)
    hi = 1.0 if k == n else min(1.0, (centre + half) / denom)
    return lo, hi


def chsh_interval(p_interval) -> tuple[float, float]:
    """Map a success-probability interval on the CHSH game to CHSH values."""
    lo, hi = p_interval
    return 8.0 * (lo - 0.5), 8.0 * (hi - 0.5)


def chsh_to_probability(s_interval) -> tuple[float, float]:
    lo, hi = s_interval
    return 0.5 + lo / 8.0, 0.5 + hi / 8.0


@dataclass(frozen=True)
class ReadoutModel:
    """Battery readout: ``eta1 = P(charged | win)``, ``eta0 = P(charged | fail)``.

    ``eta1_upper``/``eta0_upper`` are calibration upper bounds used by the
    conservative inversion.
    """

    eta1: float
    eta0: float
    eta1_upper: float | None = None
    eta0_upper: float | None = None

    def __post_init__(self):
        for name in ("eta1", "eta0", "eta1_upper", "eta0_upper"):
            val = getattr(self, name)
            if val is not None and not 0.0 <= val <= 1.0:
                raise InvalidParameter(f"{name}={val!r} is not a probability")
        if not self.eta0 < self.eta1:
            raise DegenerateCalibration("readout needs eta0 < eta1")
        e0 = self.eta0 if self.eta0_upper is None else self.eta0_upper
        e1 = 1.0 if self.eta1_upper is None else self.eta1_upper
        if not e0 < e1:
            raise DegenerateCalibration("calibration bounds need eta0_upper < eta1_upper")

    @classmethod
    def symmetric_flip(cls, eps: float) -> "ReadoutModel":
        return cls(eta1=1.0 - eps, eta0=eps)

    def observe(self, p: float) -> float:
        """Observed charging probability for true success probability ``p``."""
        return self.eta0 + (self.eta1 - self.eta0) * p


def readout_invert(p_obs_lower: float, model: ReadoutModel, conservative: bool = True) -> float:
    if conservative:
        e0 = model.eta0 if model.eta0_upper is None else model.eta0_upper
        e1 = 1.0 if model.eta1_upper is None else model.eta1_upper
    else:
        e0, e1 = model.eta0, model.eta1
    if not e1 > e0:
        raise DegenerateCalibration("readout inversion needs eta1 > eta0")
    num = p_obs_lower - e0
    if num <= 0.0:
        return 0.0
    return min(1.0, num / (e1 - e0))


def symmetric_flip_threshold() -> float:
    """Largest symmetric work-bit flip rate keeping a PR box above the CHSH quantum ceiling."""
    return math.sin(math.pi / 8.0) ** 2


@dataclass(frozen=True)
class CertificateReport:
    n: int
    k: int
    p_hat: float
    method: str
    alpha: float
    p_lower: float
    p_upper: float | None
    epsilon: float | None
    corrected_p_lower: float | None
    effective_lower: float
    thresholds: dict
    verdict: str
    s_lower: float | None = None
    time_averaged: bool = False
    game: str = ""
    readout: dict | None = None
    warnings: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        if self.time_averaged:
            d["bound_refers_to"] = "time-averaged conditional success probability"
        else:
            d["bound_refers_to"] = "i.i.d. success probability"
        return d


def certify(
    record: WorkRecord,
    game_values: GameValues,
    method: str = "hoeffding",
    alpha: float = 0.01,
    model: ReadoutModel | None = None,
    conservative: bool = True,
    chsh: bool | None = None,
) -> CertificateReport:
    """Lower-bound the success probability and compare against the game's ceilings.

    Verdicts use strict inequalities.  A post-quantum verdict is only issued
    when ``game_values.quantum_is_exact``.
    """
    if record.rounds < 1:
        raise InvalidParameter("empty work record")
    if method not in METHODS:
        raise InvalidParameter(f"unknown method {method!r}")
    if game_values.delta_units:
        raise InvalidParameter("certify needs game values as probabilities, not work ceilings")
    _check_alpha(alpha)
    n, k = record.rounds, record.charged
    p_hat = k / n
    eps = None
    if method in ("hoeffding", "azuma"):
        eps = hoeffding_epsilon(n, alpha)
        p_lo, p_hi = max(0.0, p_hat - eps), min(1.0, p_hat + eps)
    elif method == "clopper-pearson":
        p_lo, p_hi = clopper_pearson(k, n, alpha, sided="one")
    else:
        p_lo, p_hi = wilson(k, n, alpha)

    corrected = None
    readout = None
    if model is not None:
        corrected = readout_invert(p_lo, model, conservative=conservative)
        readout = asdict(model) | {"conservative": conservative}
    effective = p_lo if corrected is None else corrected

    notes = []
    thresholds = {"omega_L": game_values.local, "omega_Q": game_values.quantum, "omega_Q_exact": game_values.quantum_is_exact}
    if effective > game_values.quantum and game_values.quantum_is_exact:
        verdict = "post-quantum"
    elif effective > game_values.local:
        verdict = "nonlocal"
        if effective > game_values.quantum:
            notes.append("bound exceeds a non-exact quantum value; post-quantum verdict withheld")
    else:
        verdict = "none"
    if method == "azuma":
        notes.append("bound concerns the time-averaged success probability over the tested rounds")

    if chsh is None:
        chsh = record.game_name == "chsh"
    s_lower = 8.0 * (effective - 0.5) if chsh else None
    return CertificateReport(
        n=n,
        k=k,
        p_hat=p_hat,
        method=method,
        alpha=alpha,
        p_lower=p_lo,
        p_upper=p_hi,
        epsilon=eps,
        corrected_p_lower=corrected,
        effective_lower=effective,
        thresholds=thresholds,
        verdict=verdict,
        s_lower=s_lower,
        time_averaged=method == "azuma",
        game=record.game_name,
        readout=readout,
        warnings=tuple(notes),
    )
