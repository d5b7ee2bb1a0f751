"""Round-level simulation of the equality-controlled fuel/battery SWAP."""
from __future__ import annotations

import base64
import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .behaviors import Behavior, _aligned
from .errors import InvalidParameter
from .games import XorGame
from .kernels import VARIANT_FEEDFORWARD, VARIANT_REVERSIBLE, simulate_rounds
from .rng import RoundStream, stream_key

BITS_PER_LINE = 4096
VARIANTS = {"feedforward": VARIANT_FEEDFORWARD, "reversible": VARIANT_REVERSIBLE}


@dataclass(frozen=True)
class RegisterState:
    """Basis state of target X, guess G, controller memory M, fuel F, battery W.

    Only F and W carry energy (gap ``delta`` each); logical registers are
    degenerate.
    """

    x: int = 0
    g: int = 0
    m: int = 0
    f: int = 1
    w: int = 0
    delta: float = 1.0

    @property
    def quanta(self) -> int:
        return self.f + self.w

    @property
    def energy(self) -> float:
        return self.delta * self.quanta


def equality_controlled_swap(s: RegisterState) -> RegisterState:
    if s.x == s.g:
        return replace(s, f=s.w, w=s.f)
    return s


def memory_controlled_swap(s: RegisterState) -> RegisterState:
    if s.m == 1:
        return replace(s, f=s.w, w=s.f)
    return s


def success_bit(a: int, b: int, f: int) -> int:
    return 1 ^ a ^ b ^ f


@dataclass(frozen=True)
class RoundTranscript:
    u: object
    v: object
    a: int
    b: int
    r: int
    x: int
    g: int
    e: int
    z: int
    work: float
    pre_state: RegisterState
    post_state: RegisterState


@dataclass(frozen=True, eq=False)
class WorkRecord:
    game_name: str
    delta: float
    seed: int | None
    work_bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        bits = np.asarray(self.work_bits, dtype=np.uint8)
        if bits.ndim != 1 or np.any(bits > 1):
            raise InvalidParameter("work bits must be a 1-D array of 0/1")
        bits = bits.copy()
        bits.flags.writeable = False
        object.__setattr__(self, "work_bits", bits)

    @property
    def rounds(self) -> int:
        return int(self.work_bits.size)

    @property
    def charged(self) -> int:
        return int(self.work_bits.sum(dtype=np.int64))

    @property
    def sum_work(self) -> float:
        return self.delta * self.charged

    @property
    def p_hat(self) -> float:
        return self.charged / self.rounds

    def __eq__(self, other):
        if not isinstance(other, WorkRecord):
            return NotImplemented
        return (
            self.game_name == other.game_name
            and self.delta == other.delta
            and self.seed == other.seed
            and np.array_equal(self.work_bits, other.work_bits)
        )


class _Sampler:
    """Support-ordered CDFs for one (game, behaviour) pair."""

    def __init__(self, game: XorGame, behavior: Behavior):
        rows, sw, sf = _aligned(game, behavior)
        su, sv, _, _ = game.support
        self.game = game
        self.su, self.sv, self.sf = su, sv, sf
        self.cdf_q = np.cumsum(sw)
        self.cdf_ab = np.cumsum(rows.reshape(len(sf), 4), axis=1)

    def setting(self, uniform: float) -> int:
        return min(int(np.searchsorted(self.cdf_q, uniform, side="right")), len(self.cdf_q) - 1)

    def outputs(self, s: int, uniform: float) -> tuple[int, int]:
        o = min(int(np.searchsorted(self.cdf_ab[s], uniform, side="right")), 3)
        return o >> 1, o & 1


def _sample(sampler: _Sampler, stream: RoundStream):
    s = sampler.setting(stream.questions_uniform())
    # the behaviour sees only the setting; the pad is drawn afterwards
    a, b = sampler.outputs(s, stream.outputs_uniform())
    r = stream.pad_bit()
    game = sampler.game
    return game.alice_questions[sampler.su[s]], game.bob_questions[sampler.sv[s]], int(sampler.sf[s]), a, b, r


def _feedforward(u, v, f, a, b, r, delta) -> RoundTranscript:
    x = f ^ r
    g = a ^ b ^ r
    pre = RegisterState(x=x, g=g, m=0, f=1, w=0, delta=delta)
    post = equality_controlled_swap(pre)
    e = g ^ x
    return RoundTranscript(u, v, a, b, r, x, g, e, 1 - e, delta * (post.w - pre.w), pre, post)


def _reversible(u, v, f, a, b, r, delta) -> RoundTranscript:
    x = f ^ r
    g = a ^ b ^ r
    pre = RegisterState(x=x, g=g, m=0, f=1, w=0, delta=delta)
    computed = replace(pre, m=pre.m ^ success_bit(a, b, f))
    used = memory_controlled_swap(computed)
    post = replace(used, m=used.m ^ success_bit(a, b, f))
    e = g ^ x
    return RoundTranscript(u, v, a, b, r, x, g, e, 1 - e, delta * (post.w - pre.w), pre, post)


def run_round(game: XorGame, behavior: Behavior, stream: RoundStream, delta: float = 1.0) -> RoundTranscript:
    return _feedforward(*_sample(_Sampler(game, behavior), stream), delta)


def run_round_reversible(
    game: XorGame, behavior: Behavior, stream: RoundStream, delta: float = 1.0
) -> RoundTranscript:
    """Compute the success bit into M, swap on M, then uncompute M."""
    return _reversible(*_sample(_Sampler(game, behavior), stream), delta)


def replay_round(u, v, f, a, b, r, delta=1.0, variant="feedforward") -> RoundTranscript:
    """Apply the routing step to an already sampled transcript."""
    fn = _feedforward if variant == "feedforward" else _reversible
    return fn(u, v, f, a, b, r, delta)


def sample_rounds(
    game: XorGame,
    behavior: Behavior,
    n: int,
    seed: int,
    variant: str = "feedforward",
    first_round: int = 0,
    use_numba=None,
) -> dict:
    """Column arrays ``u_idx, v_idx, a, b, r, work`` for rounds ``first_round ..``."""
    if variant not in VARIANTS:
        raise InvalidParameter(f"unknown variant {variant!r}")
    if n < 0 or first_round < 0:
        raise InvalidParameter("round counts must be non-negative")
    sampler = _Sampler(game, behavior)
    s, a, b, r, work = simulate_rounds(
        stream_key(seed), first_round, n, sampler.cdf_q, sampler.sf, sampler.cdf_ab, VARIANTS[variant], use_numba
    )
    return {"u_idx": sampler.su[s], "v_idx": sampler.sv[s], "a": a, "b": b, "r": r, "work": work}


def simulate(
    game: XorGame,
    behavior: Behavior,
    n: int,
    seed: int,
    variant: str = "feedforward",
    delta: float = 1.0,
    use_numba=None,
) -> WorkRecord:
    if n < 1:
        raise InvalidParameter("need at least one round")
    if not delta > 0:
        raise InvalidParameter("delta must be positive")
    cols = sample_rounds(game, behavior, n, seed, variant, use_numba=use_numba)
    return WorkRecord(game.name, float(delta), int(seed), cols["work"])


def transcript_distribution(game: XorGame, behavior: Behavior) -> Iterator[tuple[tuple, float]]:
    """Yield ``((u, v, a, b, r), probability)`` over every transcript with positive weight."""
    rows, sw, sf = _aligned(game, behavior)
    su, sv, _, _ = game.support
    for k in range(len(sw)):
        u, v = game.alice_questions[su[k]], game.bob_questions[sv[k]]
        for a in (0, 1):
            for b in (0, 1):
                for r in (0, 1):
                    yield (u, v, a, b, r), sw[k] * rows[k, a, b] * 0.5


def exact_work_mean(game: XorGame, behavior: Behavior, delta: float = 1.0) -> float:
    """Mean battery work by enumerating every transcript and routing it."""
    total = 0.0
    for (u, v, a, b, r), p in transcript_distribution(game, behavior):
        if p == 0.0:
            continue
        f = game.predicate[(u, v)]
        total += p * _feedforward(u, v, f, a, b, r, delta).work
    return total


def predicate_route(distribution: dict, predicate: Callable, delta: float = 1.0) -> float:
    """Mean work when an arbitrary binary predicate of the transcript drives the SWAP."""
    total_p = sum(distribution.values())
    if abs(total_p - 1.0) > 1e-12:
        raise InvalidParameter(f"transcript distribution sums to {total_p!r}")
    work = 0.0
    for t, p in distribution.items():
        if p < 0:
            raise InvalidParameter("negative transcript probability")
        bit = int(predicate(t))
        if bit not in (0, 1):
            raise InvalidParameter("predicate must return a bit")
        pre = RegisterState(x=bit, g=1, delta=delta)
        post = equality_controlled_swap(pre)
        work += p * delta * (post.w - pre.w)
    return work


# --------------------------------------------------------------------------
# serialization


def record_to_ndjson(record: WorkRecord) -> str:
    header = {"game": record.game_name, "delta": record.delta, "seed": record.seed, "rounds": record.rounds}
    lines = [json.dumps(header)]
    bits = record.work_bits
    for start in range(0, bits.size, BITS_PER_LINE):
        chunk = bits[start : start + BITS_PER_LINE]
        packed = np.packbits(chunk, bitorder="big").tobytes()
        lines.append(json.dumps(base64.b64encode(packed).decode("ascii")))
    return "\n".join(lines) + "\n"


def record_from_ndjson(text: str) -> WorkRecord:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidParameter("empty work record")
    try:
        header = json.loads(lines[0])
        rounds = int(header["rounds"])
        chunks = []
        for ln in lines[1:]:
            raw = base64.b64decode(json.loads(ln), validate=True)
            chunks.append(np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="big"))
        seed = header.get("seed")
        record = (str(header["game"]), float(header["delta"]), None if seed is None else int(seed))
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidParameter(f"corrupt work record: {exc!r}") from exc
    expected = -(-rounds // BITS_PER_LINE)
    if len(chunks) != expected:
        raise InvalidParameter(f"work record has {len(chunks)} bit lines, expected {expected}")
    # each line is padded to a whole byte; drop the padding per line
    trimmed = []
    for i, c in enumerate(chunks):
        want = min(BITS_PER_LINE, rounds - i * BITS_PER_LINE)
        if c.size < want or c.size > want + 7 or c[want:].any():
            raise InvalidParameter(f"bit line {i} has the wrong length")
        trimmed.append(c[:want])
    bits = np.concatenate(trimmed) if trimmed else np.empty(0, dtype=np.uint8)
    return WorkRecord(record[0], record[1], record[2], bits)


def record_to_csv(record: WorkRecord) -> str:
    buf = io.StringIO()
    buf.write("round,work_bit\n")
    for i, bit in enumerate(record.work_bits.tolist()):
        buf.write(f"{i},{bit}\n")
    return buf.getvalue()


def record_from_csv(text: str, game_name: str = "unknown", delta: float = 1.0, seed=None) -> WorkRecord:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidParameter("empty work record") from None
    if [h.strip() for h in header] != ["round", "work_bit"]:
        raise InvalidParameter("CSV work record needs header 'round,work_bit'")
    bits = []
    for expected, row in enumerate(reader):
        if not row:
            continue
        try:
            idx, bit = int(row[0]), int(row[1])
        except (ValueError, IndexError) as exc:
            raise InvalidParameter(f"corrupt CSV row {row!r}") from exc
        if idx != expected or bit not in (0, 1):
            raise InvalidParameter(f"corrupt CSV row {row!r}")
        bits.append(bit)
    return WorkRecord(game_name, delta, seed, np.array(bits, dtype=np.uint8))


def write_record(record: WorkRecord, path, fmt: str = "ndjson") -> None:
    text = record_to_ndjson(record) if fmt == "ndjson" else record_to_csv(record)
    Path(path).write_text(text)


def read_record(path, game_name: str = "unknown", delta: float = 1.0) -> WorkRecord:
    text = Path(path).read_text()
    if text.lstrip().startswith("round"):
        return record_from_csv(text, game_name=game_name, delta=delta)
    return record_from_ndjson(text)
