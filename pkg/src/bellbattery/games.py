"""Finite two-player XOR games and their local, quantum and nonsignalling values."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Hashable

import numpy as np

from .errors import ConvergenceWarning, InvalidParameter, SizeLimitError
from .kernels import local_enumeration

WEIGHT_TOL = 1e-12
LOADER_WEIGHT_TOL = 1e-9
ENUMERATION_CAP = 26

Pair = tuple[Hashable, Hashable]


@dataclass(frozen=True, eq=False)
class XorGame:
    """Referee distribution ``question_weights`` over ``(u, v)`` plus the parity
    target ``predicate``; answers win when ``a ^ b == predicate[(u, v)]``.

    Pairs missing from ``question_weights`` have zero weight.  ``family`` is set
    only by the built-in constructors and is what unlocks closed-form quantum
    values; the free-text ``name`` never does.
    """

    alice_questions: tuple
    bob_questions: tuple
    question_weights: dict
    predicate: dict
    name: str = "game"
    family: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alice_questions", tuple(self.alice_questions))
        object.__setattr__(self, "bob_questions", tuple(self.bob_questions))
        object.__setattr__(self, "question_weights", {k: float(p) for k, p in self.question_weights.items()})
        object.__setattr__(self, "predicate", {k: int(f) for k, f in self.predicate.items()})
        self._validate()

    def _validate(self):
        U, V = self.alice_questions, self.bob_questions
        if not U or not V:
            raise InvalidParameter("question sets must be nonempty")
        if len(set(U)) != len(U) or len(set(V)) != len(V):
            raise InvalidParameter("question labels must be unique")
        su, sv = set(U), set(V)
        total = 0.0
        for (u, v), p in self.question_weights.items():
            if u not in su or v not in sv:
                raise InvalidParameter(f"weight on unknown question pair {(u, v)!r}")
            if not math.isfinite(p) or p < 0:
                raise InvalidParameter(f"weight {p!r} on {(u, v)!r} is not a probability")
            total += p
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidParameter(f"question weights sum to {total!r}, not 1")
        for pair, f in self.predicate.items():
            if pair not in self.question_weights:
                raise InvalidParameter(f"predicate given off the weighted pairs at {pair!r}")
            if f not in (0, 1):
                raise InvalidParameter(f"predicate value {f!r} at {pair!r} is not a bit")
        for pair, p in self.question_weights.items():
            if p > 0 and pair not in self.predicate:
                raise InvalidParameter(f"predicate missing on supported pair {pair!r}")

    # index-space views used by the numeric code

    @cached_property
    def alice_index(self) -> dict:
        return {u: i for i, u in enumerate(self.alice_questions)}

    @cached_property
    def bob_index(self) -> dict:
        return {v: j for j, v in enumerate(self.bob_questions)}

    @cached_property
    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((len(self.alice_questions), len(self.bob_questions)))
        for (u, v), p in self.question_weights.items():
            W[self.alice_index[u], self.bob_index[v]] = p
        return W

    @cached_property
    def predicate_matrix(self) -> np.ndarray:
        """Predicate bits by index, ``-1`` where undefined."""
        F = np.full((len(self.alice_questions), len(self.bob_questions)), -1, dtype=np.int64)
        for (u, v), f in self.predicate.items():
            F[self.alice_index[u], self.bob_index[v]] = f
        return F

    @cached_property
    def support(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(u_idx, v_idx, weight, f)`` over positive-weight pairs, row-major order."""
        ui, vi = np.nonzero(self.weight_matrix > 0)
        return (
            ui.astype(np.int64),
            vi.astype(np.int64),
            self.weight_matrix[ui, vi],
            self.predicate_matrix[ui, vi],
        )

    @cached_property
    def bias_matrix(self) -> np.ndarray:
        """``pi(u, v) * (-1)**f(u, v)``, zero off the support."""
        W = self.weight_matrix
        sign = np.where(self.predicate_matrix == 1, -1.0, 1.0)
        return np.where(W > 0, W * sign, 0.0)


def make_chsh() -> XorGame:
    qs = (0, 1)
    weights = {(u, v): 0.25 for u in qs for v in qs}
    pred = {(u, v): u * v for u in qs for v in qs}
    return XorGame(qs, qs, weights, pred, name="chsh", family=("chsh",))


def make_chained(N: int) -> XorGame:
    """Chained Bell game on the ``2N`` cycle edges ``(j, j)`` and ``(j+1 mod N, j)``."""
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 2:
        raise InvalidParameter(f"chained game needs an integer N >= 2, got {N!r}")
    N = int(N)
    qs = tuple(range(N))
    w = 1.0 / (2 * N)
    weights, pred = {}, {}
    for j in range(N):
        weights[(j, j)] = w
        pred[(j, j)] = 0
        edge = ((j + 1) % N, j)
        weights[edge] = w
        pred[edge] = 1 if j == N - 1 else 0
    return XorGame(qs, qs, weights, pred, name=f"chained:{N}", family=("chained", N))


def best_local_strategy(game: XorGame, cap: int = ENUMERATION_CAP):
    """Exhaustive search over deterministic strategies.

    Returns ``(value, alice_bits, bob_bits)`` where the bit maps are keyed by
    question label; ties go to the lexicographically first strategy.
    """
    nu, nv = len(game.alice_questions), len(game.bob_questions)
    if nu + nv > cap:
        raise SizeLimitError(f"{nu + nv} questions exceed the enumeration cap of {cap}")
    su, sv, sw, sf = game.support
    value, idx = local_enumeration(nu, nv, su, sv, sw, sf)
    alice, bob = idx >> nv, idx & ((1 << nv) - 1)
    alice_bits = {u: (alice >> (nu - 1 - i)) & 1 for i, u in enumerate(game.alice_questions)}
    bob_bits = {v: (bob >> (nv - 1 - j)) & 1 for j, v in enumerate(game.bob_questions)}
    # re-score the winner with a correctly rounded sum so the value does not
    # depend on the kernel's accumulation order
    value = math.fsum(
        w for (u, v), w in game.question_weights.items() if w > 0 and alice_bits[u] ^ bob_bits[v] == game.predicate[(u, v)]
    )
    return value, alice_bits, bob_bits


def local_value(game: XorGame, cap: int = ENUMERATION_CAP) -> float:
    return best_local_strategy(game, cap)[0]


def ns_value(game: XorGame) -> float:
    """Always 1: the box ``P(a,b|u,v) = 1/2 iff a ^ b == f(u,v)`` wins surely
    and is nonsignalling (see :func:`ns_witness`)."""
    return 1.0


def ns_witness(game: XorGame):
    from .behaviors import perfect_ns_box

    return perfect_ns_box(game)


def quantum_value_closed(game: XorGame) -> float | None:
    """Closed-form quantum value for the built-in families, else ``None``."""
    if game.family is None:
        return None
    if game.family[0] == "chsh":
        return math.cos(math.pi / 8) ** 2
    if game.family[0] == "chained":
        return math.cos(math.pi / (4 * game.family[1])) ** 2
    return None


@dataclass
class SeesawResult:
    value: float
    bias: float
    converged: bool
    sweeps: int
    alice_vectors: np.ndarray
    bob_vectors: np.ndarray


def _normalize_rows(X, fallback):
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    ok = norms > 1e-300
    return np.where(ok, X / np.where(ok, norms, 1.0), fallback)


def _seesaw(M, A, B, tol, max_sweeps):
    bias = float(np.sum(M * (A @ B.T)))
    for sweep in range(1, max_sweeps + 1):
        A = _normalize_rows(M @ B, A)
        B = _normalize_rows(M.T @ A, B)
        new = float(np.sum(M * (A @ B.T)))
        gain = new - bias
        bias = max(bias, new)
        if gain < tol:
            return bias, A, B, True, sweep
    return bias, A, B, False, max_sweeps


def seesaw_quantum_value(
    game: XorGame,
    restarts: int = 32,
    tol: float = 1e-12,
    seed: int = 0,
    max_sweeps: int = 10_000,
) -> SeesawResult:
    """Lower bound on the quantum value by alternating unit-vector updates.

    Maximizes ``sum pi(u,v) (-1)**f(u,v) <a_u, b_v>`` over unit vectors of
    dimension ``min(|U|, |V|)``.  Half the restarts start from deterministic
    strategies embedded as +-e1 (the best local strategy first, when it is
    enumerable), half from random unit vectors.
    """
    if restarts < 1:
        raise InvalidParameter("restarts must be >= 1")
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    M = game.bias_matrix
    nu, nv = M.shape
    d = min(nu, nv)
    rng = np.random.default_rng(seed)

    starts = []
    n_det = restarts // 2 if restarts > 1 else 1
    if nu + nv <= ENUMERATION_CAP:
        _, ab, bb = best_local_strategy(game)
        sa = np.array([1.0 - 2 * ab[u] for u in game.alice_questions])
        sb = np.array([1.0 - 2 * bb[v] for v in game.bob_questions])
        starts.append((sa, sb))
    while len(starts) < n_det:
        starts.append((1.0 - 2.0 * rng.integers(0, 2, nu), 1.0 - 2.0 * rng.integers(0, 2, nv)))
    e1 = np.zeros(d)
    e1[0] = 1.0
    inits = [(np.outer(sa, e1), np.outer(sb, e1)) for sa, sb in starts]
    while len(inits) < restarts:
        A = rng.standard_normal((nu, d))
        B = rng.standard_normal((nv, d))
        inits.append((A / np.linalg.norm(A, axis=1, keepdims=True), B / np.linalg.norm(B, axis=1, keepdims=True)))

    best = None
    for A0, B0 in inits:
        bias, A, B, converged, sweeps = _seesaw(M, A0, B0, tol, max_sweeps)
        if best is None or bias > best.bias:
            best = SeesawResult(0.5 + 0.5 * bias, bias, converged, sweeps, A, B)
        elif bias == best.bias:
            best.converged = best.converged or converged
    return best


def quantum_value_lower(game: XorGame, restarts: int = 32, tol: float = 1e-12, seed: int = 0) -> float:
    result = seesaw_quantum_value(game, restarts=restarts, tol=tol, seed=seed)
    if not result.converged:
        warnings.warn(
            f"see-saw did not converge within {result.sweeps} sweeps; returning best iterate",
            ConvergenceWarning,
            stacklevel=2,
        )
    return min(1.0, result.value)


@dataclass(frozen=True)
class GameValues:
    local: float
    quantum: float
    quantum_is_exact: bool
    nonsignalling: float
    delta_units: bool = False

    def __post_init__(self):
        if not self.local <= self.quantum + 1e-9:
            raise InvalidParameter("local value exceeds quantum value")
        if self.quantum_is_exact and not self.quantum <= self.nonsignalling + 1e-9:
            raise InvalidParameter("quantum value exceeds nonsignalling value")

    def scaled(self, delta: float) -> "GameValues":
        """Work ceilings ``delta * omega``; flags the result as scaled."""
        if self.delta_units:
            raise InvalidParameter("values are already scaled by delta")
        return GameValues(
            self.local * delta, self.quantum * delta, self.quantum_is_exact, self.nonsignalling * delta, True
        )


def game_values(game: XorGame, restarts: int = 32, tol: float = 1e-12, seed: int = 0) -> GameValues:
    closed = quantum_value_closed(game)
    if closed is not None:
        q, exact = closed, True
    else:
        q, exact = quantum_value_lower(game, restarts=restarts, tol=tol, seed=seed), False
    return GameValues(local_value(game), q, exact, ns_value(game))


# JSON interface


def _label(x):
    if isinstance(x, (str, int)) and not isinstance(x, bool):
        return x
    raise InvalidParameter(f"question labels must be strings or integers, got {x!r}")


def game_from_dict(data: dict) -> XorGame:
    try:
        U = [_label(u) for u in data["alice_questions"]]
        V = [_label(v) for v in data["bob_questions"]]
        weights, pred = {}, {}
        for row in data["weights"]:
            key = (_label(row["u"]), _label(row["v"]))
            if key in weights:
                raise InvalidParameter(f"duplicate weight for pair {key!r}")
            weights[key] = float(row["p"])
        for row in data["predicate"]:
            key = (_label(row["u"]), _label(row["v"]))
            if key in pred:
                raise InvalidParameter(f"duplicate predicate for pair {key!r}")
            if row["f"] not in (0, 1) or isinstance(row["f"], bool):
                raise InvalidParameter(f"predicate value at {key!r} must be 0 or 1")
            pred[key] = int(row["f"])
        name = str(data.get("name", "game"))
    except (KeyError, TypeError) as exc:
        raise InvalidParameter(f"malformed game document: {exc!r}") from exc
    total = sum(weights.values())
    if abs(total - 1.0) > LOADER_WEIGHT_TOL:
        raise InvalidParameter(f"question weights sum to {total!r}, outside 1 +- {LOADER_WEIGHT_TOL}")
    weights = {k: p / total for k, p in weights.items()}
    return XorGame(U, V, weights, pred, name=name)


def game_to_dict(game: XorGame) -> dict:
    return {
        "name": game.name,
        "alice_questions": list(game.alice_questions),
        "bob_questions": list(game.bob_questions),
        "weights": [{"u": u, "v": v, "p": p} for (u, v), p in game.question_weights.items()],
        "predicate": [{"u": u, "v": v, "f": f} for (u, v), f in game.predicate.items()],
    }


def load_game(path) -> XorGame:
    with open(Path(path)) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"{path}: not valid JSON ({exc})") from exc
    return game_from_dict(data)


def dump_game(game: XorGame, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game), indent=2) + "\n")
