"""Content bounds, battery monogamy, and parameter sweeps."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

from .behaviors import (
    TripartiteBehavior,
    chsh_value,
    local_zeros,
    marginalize,
    mix,
    pr_box,
)
from .errors import InvalidParameter
from .games import local_value, make_chained, make_chsh, quantum_value_closed
from .transducer import exact_work_mean

SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2
NOISE_THRESHOLD = 2.0 - SQRT2
MONOGAMY_BOUND = 1.5


@dataclass(frozen=True)
class ContentBound:
    p: float
    omega_C: float
    omega_D: float
    q_lower: float


def content_bound(p: float, omega_C: float, omega_D: float, delta: float | None = None) -> ContentBound:
    """Minimum weight of the stronger-class component in any ``C``/``D`` mixture.

    With ``delta`` given, ``p`` is read as a mean battery work and divided by it.
    """
    if delta is not None:
        if not delta > 0:
            raise InvalidParameter("delta must be positive")
        p = p / delta
    for name, val in (("p", p), ("omega_C", omega_C), ("omega_D", omega_D)):
        if not 0.0 <= val <= 1.0:
            raise InvalidParameter(f"{name}={val!r} outside [0, 1]")
    if not omega_D > omega_C:
        raise InvalidParameter("content bound needs omega_D > omega_C")
    q = (p - omega_C) / (omega_D - omega_C)
    return ContentBound(p, omega_C, omega_D, min(1.0, max(0.0, q)))


def chsh_contents(S: float) -> dict:
    if not -4.0 <= S <= 4.0:
        raise InvalidParameter(f"CHSH value {S!r} outside [-4, 4]")
    q_nl = (S - 2.0) / 2.0
    q_pq = (S - TSIRELSON) / (4.0 - TSIRELSON)
    return {
        "q_NL_lower": min(1.0, max(0.0, q_nl)),
        "q_postQ_lower": min(1.0, max(0.0, q_pq)),
    }


@dataclass(frozen=True)
class MonogamyReport:
    s_ab: float
    s_ac: float
    w_ab: float
    w_ac: float
    sum_w: float
    bound: float
    satisfied: bool
    flip_ab: bool = False
    flip_ac: bool = False


def monogamy_check(
    t: TripartiteBehavior, delta: float = 1.0, flip_ab: bool = False, flip_ac: bool = False
) -> MonogamyReport:
    """Battery form of CHSH monogamy for the AB and AC marginals.

    Both pairs use ``E00 + E01 + E10 - E11`` with inputs as labelled;
    ``flip_ab``/``flip_ac`` turn the E11 sign for exploring other orientations.
    A violation is reported, not raised.
    """
    s_ab = chsh_value(marginalize(t, "AB"), flip_e11=flip_ab)
    s_ac = chsh_value(marginalize(t, "AC"), flip_e11=flip_ac)
    w_ab = delta * (0.5 + s_ab / 8.0)
    w_ac = delta * (0.5 + s_ac / 8.0)
    total = w_ab + w_ac
    bound = MONOGAMY_BOUND * delta
    return MonogamyReport(s_ab, s_ac, w_ab, w_ac, total, bound, total <= bound + 1e-10, flip_ab, flip_ac)


def noisy_pr(eps: float):
    """``(1 - eps) PR + eps * (all-zeros local box)``."""
    if not 0.0 <= eps <= 1.0:
        raise InvalidParameter(f"noise weight {eps!r} outside [0, 1]")
    return mix([pr_box(), local_zeros(make_chsh())], [1.0 - eps, eps])


def sweep_noise(eps_grid) -> list[dict]:
    """Rows ``eps, S, work_over_delta, above_quantum`` along the noisy-PR line.

    ``above_quantum`` is decided as ``eps < 2 - sqrt(2)``, the exact
    equivalent of ``S > 2 sqrt(2)``, so the boundary point is not at the
    mercy of rounding in S.
    """
    game = make_chsh()
    rows = []
    for eps in eps_grid:
        box = noisy_pr(float(eps))
        rows.append(
            {
                "eps": float(eps),
                "S": chsh_value(box),
                "work_over_delta": exact_work_mean(game, box),
                "above_quantum": float(eps) < NOISE_THRESHOLD,
            }
        )
    return rows


def sweep_chained(N_grid) -> list[dict]:
    rows = []
    for N in N_grid:
        game = make_chained(int(N))
        gap = math.sin(math.pi / (4 * int(N))) ** 2
        rows.append(
            {
                "N": int(N),
                "omega_L": local_value(game),
                "omega_Q": quantum_value_closed(game),
                "gap": gap,
                "leading_term": math.pi**2 / (16 * int(N) ** 2),
            }
        )
    return rows


NOISE_COLUMNS = ("eps", "S", "work_over_delta", "above_quantum")
CHAINED_COLUMNS = ("N", "omega_L", "omega_Q", "gap", "leading_term")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return f"{x:.12g}"


def rows_to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(row[c]) for c in columns) + "\n")
    return buf.getvalue()
