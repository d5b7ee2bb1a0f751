"""Battery-explicit XOR-game witnesses: simulation, exact oracles and certificates."""
from ._accel import NUMBA_AVAILABLE, USE_NUMBA
from .analysis import (
    ContentBound,
    MonogamyReport,
    chsh_contents,
    content_bound,
    monogamy_check,
    noisy_pr,
    sweep_chained,
    sweep_noise,
)
from .behaviors import (
    Behavior,
    TripartiteBehavior,
    chained_quantum_behavior,
    chsh_value,
    deterministic_local,
    from_correlators,
    local_zeros,
    marginalize,
    mix,
    perfect_ns_box,
    pr_box,
    success_probability,
    tsirelson_chsh,
    uniform_behavior,
)
from .certifier import (
    CertificateReport,
    ReadoutModel,
    azuma_lower_bound,
    certify,
    chsh_interval,
    clopper_pearson,
    hoeffding_epsilon,
    readout_invert,
    symmetric_flip_threshold,
    wilson,
)
from .errors import (
    BellBatteryError,
    ConvergenceWarning,
    DegenerateCalibration,
    InconsistentMarginal,
    InvalidParameter,
    MissingParameter,
    SizeLimitError,
)
from .games import (
    GameValues,
    XorGame,
    game_values,
    local_value,
    make_chained,
    make_chsh,
    ns_value,
    quantum_value_closed,
    quantum_value_lower,
)
from .ledger import LedgerReport, binary_entropy, cycle_report
from .rng import RoundStream
from .transducer import (
    RegisterState,
    RoundTranscript,
    WorkRecord,
    equality_controlled_swap,
    exact_work_mean,
    predicate_route,
    run_round,
    run_round_reversible,
    simulate,
)

__version__ = "0.1.0"
