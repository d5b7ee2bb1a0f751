"""Bipartite (and minimal tripartite) behaviours ``P(a, b | u, v)``.

Tables are stored densely as ``table[u_idx, v_idx, a, b]`` with a boolean
``defined`` mask for settings the behaviour actually specifies.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InconsistentMarginal, InvalidParameter
from .games import XorGame, _label

NEG_TOL = 1e-12
NORM_TOL = 1e-12
NS_TOL = 1e-10

_PARITY = np.array([[1.0, -1.0], [-1.0, 1.0]])  # (-1)**(a ^ b)


def _clean_rows(table, mask):
    """Clamp float-noise negatives to 0 and renormalize; reject anything worse."""
    t = np.array(table, dtype=np.float64, copy=True)
    rows = t[mask]
    if not np.all(np.isfinite(rows)):
        raise InvalidParameter("behaviour has non-finite probabilities")
    if np.any(rows < -NEG_TOL):
        raise InvalidParameter(f"negative probability {rows.min()!r} in behaviour")
    sums = rows.reshape(rows.shape[0], -1).sum(axis=1)
    if np.any(np.abs(sums - 1.0) > NORM_TOL):
        raise InvalidParameter("behaviour rows must each sum to 1")
    rows = np.clip(rows, 0.0, None)
    rows /= rows.reshape(rows.shape[0], -1).sum(axis=1).reshape((-1,) + (1,) * (rows.ndim - 1))
    t[mask] = rows
    t[~mask] = 0.0
    return t


@dataclass(frozen=True, eq=False)
class Behavior:
    alice_questions: tuple
    bob_questions: tuple
    table: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        U, V = tuple(self.alice_questions), tuple(self.bob_questions)
        object.__setattr__(self, "alice_questions", U)
        object.__setattr__(self, "bob_questions", V)
        if not U or not V or len(set(U)) != len(U) or len(set(V)) != len(V):
            raise InvalidParameter("question sets must be nonempty with unique labels")
        mask = np.asarray(self.defined, dtype=bool)
        table = np.asarray(self.table, dtype=np.float64)
        if table.shape != (len(U), len(V), 2, 2) or mask.shape != (len(U), len(V)):
            raise InvalidParameter(f"table shape {table.shape} does not match question sets")
        cleaned = _clean_rows(table, mask)
        cleaned.flags.writeable = False
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "table", cleaned)
        object.__setattr__(self, "defined", mask)

    @classmethod
    def from_rows(cls, alice_questions, bob_questions, rows: dict) -> "Behavior":
        """Build from ``{(u, v): 2x2 array over (a, b)}``."""
        U, V = tuple(alice_questions), tuple(bob_questions)
        ui = {u: i for i, u in enumerate(U)}
        vi = {v: j for j, v in enumerate(V)}
        table = np.zeros((len(U), len(V), 2, 2))
        mask = np.zeros((len(U), len(V)), dtype=bool)
        for (u, v), p in rows.items():
            if u not in ui or v not in vi:
                raise InvalidParameter(f"row for unknown setting {(u, v)!r}")
            table[ui[u], vi[v]] = np.asarray(p, dtype=np.float64).reshape(2, 2)
            mask[ui[u], vi[v]] = True
        return cls(U, V, table, mask)

    def row(self, u, v) -> np.ndarray:
        i, j = self.alice_questions.index(u), self.bob_questions.index(v)
        if not self.defined[i, j]:
            raise InvalidParameter(f"behaviour undefined at setting {(u, v)!r}")
        return self.table[i, j]

    @property
    def normalized(self) -> bool:
        return True  # enforced at construction

    @property
    def nonnegative(self) -> bool:
        return True  # enforced at construction

    def correlators(self) -> np.ndarray:
        """``E[u, v] = sum (-1)**(a^b) P(a,b|u,v)``; NaN where undefined."""
        E = np.einsum("ijab,ab->ij", self.table, _PARITY)
        return np.where(self.defined, E, np.nan)

    def alice_marginals(self) -> np.ndarray:
        return np.where(self.defined[..., None], self.table.sum(axis=3), np.nan)

    def bob_marginals(self) -> np.ndarray:
        return np.where(self.defined[..., None], self.table.sum(axis=2), np.nan)

    def is_nonsignalling(self, tol: float = NS_TOL) -> bool:
        pa = self.alice_marginals()
        pb = self.bob_marginals()
        for i in range(len(self.alice_questions)):
            rows = pa[i][self.defined[i]]
            if rows.size and np.ptp(rows, axis=0).max() > tol:
                return False
        for j in range(len(self.bob_questions)):
            rows = pb[:, j][self.defined[:, j]]
            if rows.size and np.ptp(rows, axis=0).max() > tol:
                return False
        return True

    @property
    def nonsignalling(self) -> bool:
        return self.is_nonsignalling()


def from_correlators(E, alice_questions=None, bob_questions=None) -> Behavior:
    """Unbiased-marginal behaviour ``P(a,b|u,v) = (1 + (-1)**(a^b) E[u,v]) / 4``.

    ``E`` is either a mapping ``{(u, v): value}`` (unlisted settings stay
    undefined) or a 2-D array indexed by position in the question sets.
    """
    if isinstance(E, dict):
        if alice_questions is None:
            alice_questions = tuple(dict.fromkeys(u for u, _ in E))
        if bob_questions is None:
            bob_questions = tuple(dict.fromkeys(v for _, v in E))
        rows = {}
        for pair, e in E.items():
            rows[pair] = _correlator_row(float(e), pair)
        return Behavior.from_rows(alice_questions, bob_questions, rows)
    arr = np.asarray(E, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidParameter("correlator array must be 2-D")
    U = tuple(range(arr.shape[0])) if alice_questions is None else tuple(alice_questions)
    V = tuple(range(arr.shape[1])) if bob_questions is None else tuple(bob_questions)
    rows = {(u, v): _correlator_row(arr[i, j], (u, v)) for i, u in enumerate(U) for j, v in enumerate(V)}
    return Behavior.from_rows(U, V, rows)


def _correlator_row(e: float, pair) -> np.ndarray:
    if not math.isfinite(e) or abs(e) > 1.0 + NEG_TOL:
        raise InvalidParameter(f"correlator {e!r} at {pair!r} outside [-1, 1]")
    e = min(1.0, max(-1.0, e))
    return (1.0 + _PARITY * e) / 4.0


def _parity_box(parity_bit: int) -> np.ndarray:
    row = np.zeros((2, 2))
    for a in (0, 1):
        row[a, a ^ parity_bit] = 0.5
    return row


def pr_box() -> Behavior:
    rows = {(u, v): _parity_box(u * v) for u in (0, 1) for v in (0, 1)}
    return Behavior.from_rows((0, 1), (0, 1), rows)


def perfect_ns_box(game: XorGame) -> Behavior:
    """Wins ``game`` with certainty; uniform marginals, uniform off the predicate."""
    rows = {}
    for u in game.alice_questions:
        for v in game.bob_questions:
            f = game.predicate.get((u, v))
            rows[(u, v)] = np.full((2, 2), 0.25) if f is None else _parity_box(f)
    return Behavior.from_rows(game.alice_questions, game.bob_questions, rows)


def deterministic_local(alice_bits: dict, bob_bits: dict, alice_questions=None, bob_questions=None) -> Behavior:
    U = tuple(alice_bits) if alice_questions is None else tuple(alice_questions)
    V = tuple(bob_bits) if bob_questions is None else tuple(bob_questions)
    missing = [u for u in U if u not in alice_bits] + [v for v in V if v not in bob_bits]
    if missing:
        raise InvalidParameter(f"deterministic strategy missing questions {missing!r}")
    rows = {}
    for u in U:
        for v in V:
            p = np.zeros((2, 2))
            p[int(alice_bits[u]) & 1, int(bob_bits[v]) & 1] = 1.0
            rows[(u, v)] = p
    return Behavior.from_rows(U, V, rows)


def uniform_behavior(alice_questions, bob_questions) -> Behavior:
    """Every outcome pair equally likely at every setting (all correlators 0)."""
    U, V = tuple(alice_questions), tuple(bob_questions)
    return Behavior(U, V, np.full((len(U), len(V), 2, 2), 0.25), np.ones((len(U), len(V)), dtype=bool))


def local_zeros(game: XorGame) -> Behavior:
    """Both parties always answer 0."""
    return deterministic_local(
        {u: 0 for u in game.alice_questions}, {v: 0 for v in game.bob_questions}
    )


def mix(components, weights) -> Behavior:
    components = list(components)
    w = np.asarray(weights, dtype=np.float64)
    if not components or len(components) != w.size:
        raise InvalidParameter("need one weight per component")
    if np.any(w < 0) or abs(w.sum() - 1.0) > NORM_TOL:
        raise InvalidParameter("mixture weights must be a probability vector")
    first = components[0]
    for c in components[1:]:
        if c.alice_questions != first.alice_questions or c.bob_questions != first.bob_questions:
            raise InvalidParameter("mixture components have mismatched question sets")
    mask = np.logical_and.reduce([c.defined for c in components])
    table = sum(wi * c.table for wi, c in zip(w, components))
    return Behavior(first.alice_questions, first.bob_questions, table, mask)


def _aligned(game: XorGame, behavior: Behavior):
    """Behaviour rows at each supported game setting, in game support order."""
    bu = {u: i for i, u in enumerate(behavior.alice_questions)}
    bv = {v: j for j, v in enumerate(behavior.bob_questions)}
    su, sv, sw, sf = game.support
    bi = np.empty(su.shape, dtype=np.int64)
    bj = np.empty(sv.shape, dtype=np.int64)
    for k, (i, j) in enumerate(zip(su, sv)):
        u, v = game.alice_questions[i], game.bob_questions[j]
        if u not in bu or v not in bv or not behavior.defined[bu[u], bv[v]]:
            raise InvalidParameter(f"behaviour does not cover game setting {(u, v)!r}")
        bi[k], bj[k] = bu[u], bv[v]
    return behavior.table[bi, bj], sw, sf


def success_probability(game: XorGame, behavior: Behavior) -> float:
    rows, sw, sf = _aligned(game, behavior)
    # winning mass: P(0,f) + P(1,1^f)
    win = rows[np.arange(len(sf)), 0, sf] + rows[np.arange(len(sf)), 1, 1 - sf]
    return math.fsum(sw * win)


def _check_chsh_labels(behavior: Behavior):
    if set(behavior.alice_questions) != {0, 1} or set(behavior.bob_questions) != {0, 1}:
        raise InvalidParameter("CHSH value needs question sets {0, 1} x {0, 1}")
    for u in (0, 1):
        for v in (0, 1):
            behavior.row(u, v)


def chsh_value(behavior: Behavior, flip_e11: bool = False) -> float:
    """``S = E00 + E01 + E10 - E11`` (``+ E11`` terms become ``-`` when flipped)."""
    _check_chsh_labels(behavior)
    E = {}
    for u in (0, 1):
        for v in (0, 1):
            E[u, v] = float(np.sum(_PARITY * behavior.row(u, v)))
    sign = 1.0 if flip_e11 else -1.0
    return E[0, 0] + E[0, 1] + E[1, 0] + sign * E[1, 1]


def chained_quantum_behavior(N: int) -> Behavior:
    """Correlators ``+cos(pi/2N)`` on equality edges, ``-cos(pi/2N)`` on the
    wrap-around edge, 0 elsewhere."""
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 2:
        raise InvalidParameter(f"chained behaviour needs an integer N >= 2, got {N!r}")
    N = int(N)
    c = math.cos(math.pi / (2 * N))
    E = np.zeros((N, N))
    for j in range(N):
        E[j, j] = c
        E[(j + 1) % N, j] = c
    E[0, N - 1] = -c
    return from_correlators(E)


def tsirelson_chsh() -> Behavior:
    s = 1.0 / math.sqrt(2.0)
    return from_correlators(np.array([[s, s], [s, -s]]))


# --------------------------------------------------------------------------
# tripartite


@dataclass(frozen=True, eq=False)
class TripartiteBehavior:
    """Binary-input, binary-output ``table[x, y, z, a, b, c]``."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if t.shape != (2,) * 6:
            raise InvalidParameter(f"tripartite table must have shape (2,)*6, got {t.shape}")
        flat = t.reshape(8, 8)
        cleaned = _clean_rows(flat, np.ones(8, dtype=bool)).reshape((2,) * 6)
        cleaned.flags.writeable = False
        object.__setattr__(self, "table", cleaned)
        if not self.is_nonsignalling():
            raise InvalidParameter("tripartite behaviour is signalling")

    def is_nonsignalling(self, tol: float = NS_TOL) -> bool:
        t = self.table
        for party in range(3):
            reduced = t.sum(axis=3 + party)  # drop that party's output
            spread = np.ptp(reduced, axis=party)  # vary that party's input
            if spread.max() > tol:
                return False
        return True

    @classmethod
    def product(cls, ab: Behavior, c_table) -> "TripartiteBehavior":
        """``P(a,b|x,y) * Q(c|z)`` with ``c_table[z, c]``."""
        _check_chsh_labels(ab)
        q = np.asarray(c_table, dtype=np.float64)
        if q.shape != (2, 2):
            raise InvalidParameter("c_table must be 2x2 over (z, c)")
        P = np.empty((2, 2, 2, 2))
        for x in (0, 1):
            for y in (0, 1):
                P[x, y] = ab.row(x, y)
        return cls(np.einsum("xyab,zc->xyzabc", P, q))

    @classmethod
    def uniform(cls) -> "TripartiteBehavior":
        return cls(np.full((2,) * 6, 1.0 / 8))


def marginalize(t: TripartiteBehavior, pair: str, tol: float = NS_TOL) -> Behavior:
    """Two-party marginal, ``pair`` in ``{"AB", "AC"}``.

    Sums out the traced party's output at each of its settings and requires the
    result not to depend on that setting.
    """
    if pair == "AB":
        m = t.table.sum(axis=5)  # x, y, z, a, b
        per_setting = np.moveaxis(m, 2, 0)  # z, x, y, a, b
    elif pair == "AC":
        m = t.table.sum(axis=4)  # x, y, z, a, c
        per_setting = np.moveaxis(m, 1, 0)  # y, x, z, a, c
    else:
        raise InvalidParameter(f"pair must be 'AB' or 'AC', got {pair!r}")
    if np.abs(per_setting[0] - per_setting[1]).max() > tol:
        raise InconsistentMarginal(f"{pair} marginal depends on the traced party's setting")
    return Behavior((0, 1), (0, 1), per_setting[0], np.ones((2, 2), dtype=bool))


# --------------------------------------------------------------------------
# JSON interface


def behavior_from_dict(data: dict) -> Behavior:
    try:
        if "correlators" in data:
            E = {}
            for row in data["correlators"]:
                key = (_label(row["u"]), _label(row["v"]))
                if key in E:
                    raise InvalidParameter(f"duplicate correlator for {key!r}")
                E[key] = float(row["E"])
            U = [_label(u) for u in data["alice_questions"]] if "alice_questions" in data else None
            V = [_label(v) for v in data["bob_questions"]] if "bob_questions" in data else None
            return from_correlators(E, U, V)
        U = [_label(u) for u in data["alice_questions"]]
        V = [_label(v) for v in data["bob_questions"]]
        rows = {}
        for row in data["table"]:
            key = (_label(row["u"]), _label(row["v"]))
            if key in rows:
                raise InvalidParameter(f"duplicate table row for {key!r}")
            rows[key] = [[row["p00"], row["p01"]], [row["p10"], row["p11"]]]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParameter):
            raise
        raise InvalidParameter(f"malformed behaviour document: {exc!r}") from exc
    return Behavior.from_rows(U, V, rows)


def behavior_to_dict(behavior: Behavior) -> dict:
    table = []
    for i, u in enumerate(behavior.alice_questions):
        for j, v in enumerate(behavior.bob_questions):
            if behavior.defined[i, j]:
                p = behavior.table[i, j]
                table.append(
                    {"u": u, "v": v, "p00": p[0, 0], "p01": p[0, 1], "p10": p[1, 0], "p11": p[1, 1]}
                )
    return {
        "alice_questions": list(behavior.alice_questions),
        "bob_questions": list(behavior.bob_questions),
        "table": [{k: (float(x) if k.startswith("p") else x) for k, x in r.items()} for r in table],
    }


def tripartite_from_dict(data: dict) -> TripartiteBehavior:
    """Rows ``{"x","y","z","p": [p000, p001, ..., p111]}`` with ``c`` fastest."""
    t = np.full((2,) * 6, np.nan)
    try:
        for row in data["table"]:
            x, y, z = int(row["x"]), int(row["y"]), int(row["z"])
            if not np.all(np.isnan(t[x, y, z])):
                raise InvalidParameter(f"duplicate tripartite row {(x, y, z)!r}")
            t[x, y, z] = np.asarray(row["p"], dtype=np.float64).reshape(2, 2, 2)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, InvalidParameter):
            raise
        raise InvalidParameter(f"malformed tripartite document: {exc!r}") from exc
    if np.isnan(t).any():
        raise InvalidParameter("tripartite table must cover all 8 settings")
    return TripartiteBehavior(t)


def _load_json(path):
    with open(Path(path)) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"{path}: not valid JSON ({exc})") from exc


def load_behavior(path) -> Behavior:
    return behavior_from_dict(_load_json(path))


def load_tripartite(path) -> TripartiteBehavior:
    return tripartite_from_dict(_load_json(path))
