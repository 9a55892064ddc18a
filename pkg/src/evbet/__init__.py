"""Anytime-valid testing and confidence sequences for bounded means via coin-betting."""

from .domain import (
    DiscreteDistribution,
    SampleSpace,
    TwoPointMeasure,
    anchored_two_point,
    sample_stream,
    two_point_weight,
)
from .evariables import (
    CoinBetEVariable,
    DominationCertificate,
    HoeffdingEVariable,
    TabulatedEVariable,
    bet_bounds,
    beta_interval,
    check_evariable,
    dominating_lambda,
    eval_coinbet,
    eval_hoeffding,
    eval_majorizer,
)
from .betting import (
    ConstantStrategy,
    PortfolioPosterior,
    UniversalPortfolioStrategy,
    up_bet,
    up_update,
)
from .game import WealthLedger, play_round, run_game, run_games_batch
from .confseq import ConfidenceState, cs_interval, cs_update, default_mu_grid, run_cs_batch
from .multiround import (
    EProcess,
    MultiRoundCoinBet,
    StoppingMask,
    TreeHypothesis,
    audit_eprocess,
    dominate_T2,
    enumerate_masks,
    eval_multiround,
    tree_expectation,
)
from .iid_case import XiStats, check_iid_bruteforce, check_iid_closed_form, xi_stats

__version__ = "0.1.0"
