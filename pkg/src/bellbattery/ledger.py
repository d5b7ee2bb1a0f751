"""Cyclic thermodynamic bookkeeping: fuel restoration and memory reset."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameter, MissingParameter

VARIANTS = ("reversible", "measured-memory", "full-transcript")


def binary_entropy(p: float) -> float:
    """Shannon entropy of a Bernoulli(p) bit, in bits."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"p={p!r} is not a probability")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class LedgerReport:
    p: float
    delta: float
    kT_ln2: float
    variant: str
    battery_gain: float
    fuel_cost: float
    reset_cost: float
    net_work_upper: float
    reset_entropy_bits: float
    notes: tuple = ()

    def to_dict(self) -> dict:
        per_kt = (lambda e: e / self.kT_ln2) if self.kT_ln2 > 0 else (lambda e: None)
        return {
            "variant": self.variant,
            "p": self.p,
            "delta": self.delta,
            "kT_ln2": self.kT_ln2,
            "reset_entropy_bits": self.reset_entropy_bits,
            "absolute": {
                "battery_gain": self.battery_gain,
                "fuel_cost": self.fuel_cost,
                "reset_cost": self.reset_cost,
                "net_work_upper": self.net_work_upper,
            },
            "delta_units": {
                "battery_gain": self.battery_gain / self.delta,
                "fuel_cost": self.fuel_cost / self.delta,
                "battery_minus_fuel": (self.battery_gain - self.fuel_cost) / self.delta,
            },
            "kT_ln2_units": {
                "reset_cost": per_kt(self.reset_cost),
                "net_work_upper": per_kt(self.net_work_upper),
            },
            "fuel_cost_is_lower_bound": True,
            "reset_cost_is_lower_bound": self.variant != "reversible",
            "notes": list(self.notes),
        }


def cycle_report(
    p: float,
    delta: float = 1.0,
    kT_ln2: float = 1.0,
    variant: str = "measured-memory",
    transcript_entropy: float | None = None,
) -> LedgerReport:
    """Upper bound on mean net work per cycle for one controller variant.

    ``transcript_entropy`` is H(T) in bits and is required for the
    ``full-transcript`` variant.
    """
    h = binary_entropy(p)
    if not delta > 0:
        raise InvalidParameter("delta must be positive")
    if not kT_ln2 >= 0:
        raise InvalidParameter("kT_ln2 must be non-negative")
    if variant not in VARIANTS:
        raise InvalidParameter(f"unknown ledger variant {variant!r}")

    battery = delta * p
    fuel = delta * p
    notes = ["side-information-assisted reset not credited"]
    if variant == "reversible":
        entropy = 0.0
        notes.append("success bit uncomputed; no persistent memory to erase")
    elif variant == "measured-memory":
        entropy = h
    else:
        if transcript_entropy is None:
            raise MissingParameter("full-transcript ledger needs the transcript entropy H(T)")
        if not math.isfinite(transcript_entropy) or transcript_entropy < h - 1e-12:
            raise InvalidParameter(
                f"H(T)={transcript_entropy!r} bits is below h2(p)={h!r}; the success bit is a function of T"
            )
        entropy = max(float(transcript_entropy), h)
    reset = kT_ln2 * entropy
    net = battery - fuel - reset
    return LedgerReport(p, delta, kT_ln2, variant, battery, fuel, reset, net, entropy, tuple(notes))
