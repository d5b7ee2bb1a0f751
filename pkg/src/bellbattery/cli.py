"""Command-line entry point: ``bellbattery <command> [flags]``.

Exit status: 0 on success (a "none" verdict is still success), 2 for invalid
input, 3 for I/O failures.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import analysis, behaviors, certifier, games, ledger, transducer
from .errors import BellBatteryError, InvalidParameter

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3

BEHAVIOR_HELP = (
    "behaviour: pr | tsirelson | local-zeros | uniform | noisy-pr:EPS | chained-q:N | PATH.json "
    "(pr is the perfect nonsignalling box for the chosen game; tsirelson is the optimal quantum "
    "behaviour for chsh/chained games)"
)
GAME_HELP = "game: chsh | chained:N | PATH.json"
TRIPARTITE_HELP = "tripartite behaviour: pr-uniform | tsirelson-uniform | uniform | PATH.json"


def _existing(path: str) -> str:
    if not Path(path).is_file():
        raise InvalidParameter(f"no such file: {path}")
    return path


def resolve_game(spec: str) -> games.XorGame:
    if spec == "chsh":
        return games.make_chsh()
    if spec.startswith("chained:"):
        try:
            N = int(spec.split(":", 1)[1])
        except ValueError:
            raise InvalidParameter(f"bad chained game spec {spec!r}") from None
        return games.make_chained(N)
    if Path(spec).suffix == ".json" or Path(spec).exists():
        return games.load_game(_existing(spec))
    raise InvalidParameter(f"unknown game {spec!r}")


def _parse_number(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InvalidParameter(f"bad {what} {text!r}") from None


def resolve_behavior(spec: str, game: games.XorGame) -> behaviors.Behavior:
    if spec == "pr":
        return behaviors.perfect_ns_box(game)
    if spec == "local-zeros":
        return behaviors.local_zeros(game)
    if spec == "uniform":
        return behaviors.uniform_behavior(game.alice_questions, game.bob_questions)
    if spec == "tsirelson":
        if game.family == ("chsh",):
            return behaviors.tsirelson_chsh()
        if game.family is not None and game.family[0] == "chained":
            return behaviors.chained_quantum_behavior(game.family[1])
        raise InvalidParameter("tsirelson behaviour is only built in for chsh and chained games")
    if spec.startswith("noisy-pr:"):
        eps = _parse_number(spec.split(":", 1)[1], "noise weight")
        if not 0.0 <= eps <= 1.0:
            raise InvalidParameter(f"noise weight {eps!r} outside [0, 1]")
        return behaviors.mix([behaviors.perfect_ns_box(game), behaviors.local_zeros(game)], [1.0 - eps, eps])
    if spec.startswith("chained-q:"):
        try:
            N = int(spec.split(":", 1)[1])
        except ValueError:
            raise InvalidParameter(f"bad behaviour spec {spec!r}") from None
        return behaviors.chained_quantum_behavior(N)
    if Path(spec).suffix == ".json" or Path(spec).exists():
        return behaviors.load_behavior(_existing(spec))
    raise InvalidParameter(f"unknown behaviour {spec!r}")


def resolve_tripartite(spec: str) -> behaviors.TripartiteBehavior:
    uniform_c = [[0.5, 0.5], [0.5, 0.5]]
    if spec == "pr-uniform":
        return behaviors.TripartiteBehavior.product(behaviors.pr_box(), uniform_c)
    if spec == "tsirelson-uniform":
        return behaviors.TripartiteBehavior.product(behaviors.tsirelson_chsh(), uniform_c)
    if spec == "uniform":
        return behaviors.TripartiteBehavior.uniform()
    if Path(spec).suffix == ".json" or Path(spec).exists():
        return behaviors.load_tripartite(_existing(spec))
    raise InvalidParameter(f"unknown tripartite behaviour {spec!r}")


def parse_grid(text: str, integer: bool = False) -> list:
    """``a,b,c`` or ``start:stop:step`` (inclusive of stop); ``start:stop`` steps by 1."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (2, 3):
                raise ValueError
            start, stop = float(parts[0]), float(parts[1])
            step = float(parts[2]) if len(parts) == 3 else 1.0
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(count)]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidParameter(f"bad grid {text!r}") from None
    if integer:
        if any(v != int(v) for v in values):
            raise InvalidParameter(f"grid {text!r} must be integers")
        return [int(v) for v in values]
    return values


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _json_only(args) -> None:
    if getattr(args, "format", None) not in (None, "json"):
        raise InvalidParameter(f"{args.command} reports are written as json only")


def cmd_values(args) -> int:
    game = resolve_game(args.game)
    vals = games.game_values(game, restarts=args.restarts, seed=args.seed)
    scale = args.delta if args.absolute else 1.0
    report = {
        "game": game.name,
        "omega_L": vals.local,
        "omega_Q": vals.quantum,
        "omega_Q_exact": vals.quantum_is_exact,
        "omega_Q_is_lower_bound": not vals.quantum_is_exact,
        "omega_NS": vals.nonsignalling,
        "work_ceilings": {
            "units": "absolute" if args.absolute else "delta",
            "delta": args.delta,
            "W_L": vals.local * scale,
            "W_Q": vals.quantum * scale,
            "W_NS": vals.nonsignalling * scale,
        },
    }
    _emit(_json(report), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    game = resolve_game(args.game)
    box = resolve_behavior(args.behavior, game)
    if args.rounds < 1:
        raise InvalidParameter("--rounds must be >= 1")
    record = transducer.simulate(game, box, args.rounds, args.seed, variant=args.variant, delta=args.delta)
    fmt = args.format or "ndjson"
    if fmt == "json":
        raise InvalidParameter("work records are written as ndjson or csv")
    text = transducer.record_to_ndjson(record) if fmt == "ndjson" else transducer.record_to_csv(record)
    _emit(text, args.out)
    return EXIT_OK


def _readout_model(args):
    if args.eta0_upper is None and args.eta1_upper is None:
        return None
    eta0 = 0.0 if args.eta0_upper is None else args.eta0_upper
    eta1 = 1.0 if args.eta1_upper is None else args.eta1_upper
    return certifier.ReadoutModel(eta1=eta1, eta0=eta0, eta1_upper=args.eta1_upper, eta0_upper=args.eta0_upper)


def cmd_certify(args) -> int:
    _json_only(args)
    text = Path(args.record).read_text()
    if text.lstrip().startswith("round"):
        if args.game is None:
            raise InvalidParameter("CSV records carry no game name; pass --game")
        record = transducer.record_from_csv(text, game_name=resolve_game(args.game).name, delta=args.delta)
    else:
        record = transducer.record_from_ndjson(text)
    game = resolve_game(args.game if args.game is not None else record.game_name)
    vals = games.game_values(game, restarts=args.restarts)
    report = certifier.certify(
        record, vals, method=args.method, alpha=args.alpha, model=_readout_model(args), chsh=game.family == ("chsh",)
    )
    _emit(_json(report.to_dict()), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.kind == "noise":
        grid = parse_grid(args.grid or "0:1:0.05")
        rows, cols = analysis.sweep_noise(grid), analysis.NOISE_COLUMNS
        if args.absolute:
            rows = [r | {"work_over_delta": r["work_over_delta"] * args.delta} for r in rows]
    else:
        grid = parse_grid(args.grid or "2:10", integer=True)
        rows, cols = analysis.sweep_chained(grid), analysis.CHAINED_COLUMNS
    if (args.format or "csv") == "json":
        _emit(_json(rows), args.out)
    else:
        _emit(analysis.rows_to_csv(rows, cols), args.out)
    return EXIT_OK


def cmd_ledger(args) -> int:
    _json_only(args)
    if args.p is not None:
        p = args.p
    elif args.game is not None and args.behavior is not None:
        game = resolve_game(args.game)
        p = behaviors.success_probability(game, resolve_behavior(args.behavior, game))
    else:
        raise InvalidParameter("ledger needs --p, or --game with --behavior")
    report = ledger.cycle_report(
        p, delta=args.delta, kT_ln2=args.kt_ln2, variant=args.variant, transcript_entropy=args.transcript_entropy
    )
    _emit(_json(report.to_dict()), args.out)
    return EXIT_OK


def cmd_monogamy(args) -> int:
    _json_only(args)
    t = resolve_tripartite(args.tripartite)
    delta = args.delta if args.absolute else 1.0
    rep = analysis.monogamy_check(t, delta=delta, flip_ab=args.flip_ab, flip_ac=args.flip_ac)
    out = {
        "units": "absolute" if args.absolute else "delta",
        "S_AB": rep.s_ab,
        "S_AC": rep.s_ac,
        "W_AB": rep.w_ab,
        "W_AC": rep.w_ac,
        "sum_W": rep.sum_w,
        "bound": rep.bound,
        "satisfied": rep.satisfied,
        "flip_ab": rep.flip_ab,
        "flip_ac": rep.flip_ac,
    }
    _emit(_json(out), args.out)
    return EXIT_OK


def _common(p: argparse.ArgumentParser, *names: str) -> None:
    opts = {
        "game": dict(flags=("--game",), help=GAME_HELP),
        "behavior": dict(flags=("--behavior",), help=BEHAVIOR_HELP),
        "rounds": dict(flags=("--rounds",), type=int, default=1000, help="number of rounds"),
        "seed": dict(flags=("--seed",), type=int, default=0, help="master seed"),
        "alpha": dict(flags=("--alpha",), type=float, default=0.01, help="error probability"),
        "method": dict(flags=("--method",), choices=certifier.METHODS, default="hoeffding"),
        "delta": dict(flags=("--delta",), type=float, default=1.0, help="energy quantum of fuel and battery"),
        "kt_ln2": dict(flags=("--kt-ln2",), dest="kt_ln2", type=float, default=1.0, help="k_B T ln 2"),
        "eta0_upper": dict(flags=("--eta0-upper",), dest="eta0_upper", type=float, default=None),
        "eta1_upper": dict(flags=("--eta1-upper",), dest="eta1_upper", type=float, default=None),
        "out": dict(flags=("--out",), default=None, help="output path (default stdout)"),
        "format": dict(flags=("--format",), choices=("json", "csv", "ndjson"), default=None),
        "absolute": dict(flags=("--absolute",), action="store_true", help="multiply energies by delta"),
        "restarts": dict(flags=("--restarts",), type=int, default=32, help="see-saw restarts for custom games"),
    }
    for name in names:
        spec = dict(opts[name])
        flags = spec.pop("flags")
        p.add_argument(*flags, **spec)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellbattery",
        description="Battery-explicit XOR-game witness: values, simulation, certification, bookkeeping.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("values", help="local / quantum / nonsignalling values and work ceilings")
    _common(p, "game", "delta", "absolute", "out", "restarts", "seed")
    p.set_defaults(func=cmd_values, game="chsh")

    p = sub.add_parser("simulate", help="simulate rounds and write a work record")
    _common(p, "game", "behavior", "rounds", "seed", "delta", "out", "format")
    p.add_argument("--variant", choices=tuple(transducer.VARIANTS), default="feedforward")
    p.set_defaults(func=cmd_simulate, game="chsh", behavior="pr")

    p = sub.add_parser("certify", help="certificate from a work record")
    p.add_argument("record", help="work record (.ndjson or .csv)")
    _common(p, "game", "alpha", "method", "delta", "eta0_upper", "eta1_upper", "out", "format", "restarts")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", help="noisy-PR or chained-family tables (plot-ready CSV)")
    p.add_argument("kind", choices=("noise", "chained"))
    p.add_argument("--grid", default=None, help="a,b,c or start:stop:step (stop inclusive)")
    _common(p, "delta", "absolute", "out", "format")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ledger", help="cyclic work bookkeeping for a controller variant")
    p.add_argument("--p", type=float, default=None, help="success probability")
    p.add_argument("--variant", choices=ledger.VARIANTS, default="measured-memory")
    p.add_argument("--transcript-entropy", type=float, default=None, help="H(T) in bits (full-transcript)")
    _common(p, "game", "behavior", "delta", "kt_ln2", "out", "format")
    p.set_defaults(func=cmd_ledger)

    p = sub.add_parser("monogamy", help="battery monogamy for a tripartite behaviour")
    p.add_argument("--tripartite", default="pr-uniform", help=TRIPARTITE_HELP)
    p.add_argument("--flip-ab", action="store_true", help="flip the E11 sign in S_AB")
    p.add_argument("--flip-ac", action="store_true", help="flip the E11 sign in S_AC")
    _common(p, "delta", "absolute", "out", "format")
    p.set_defaults(func=cmd_monogamy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BellBatteryError as exc:
        print(f"bellbattery: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"bellbattery: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
