"""Active preference learning with recursive agent models on discrete grids."""

from .model import (
    ABSOLUTE_DISTANCE,
    SQUARED_DISTANCE,
    REWARD_FORMS,
    BeliefParams,
    DegenerateBeliefError,
    GridBelief,
    InvalidInputError,
    LabeledExample,
    Query,
    ThetaGrid,
    canonicalize,
    discretize_belief,
    mixture_density,
    response_prob,
    reward,
    sample_answer,
    uniform_belief,
)
from .inference import (
    ImpossibleEvidenceError,
    QueryGrid,
    QueryPolicy,
    eig_map,
    entropy,
    expected_info_gain,
    info_gain,
    posterior_update,
    predictive_answer_prob,
    sample_index,
    softmax_policy,
)
from .agents import (
    BeliefEnsemble,
    MleSearchConfig,
    ParamRange,
    bayes_factor,
    l2_query_policy,
    l2_select_query,
    l3_answer_policy,
    l3_teaching_policy,
    l3_teaching_utilities,
    l3_teaching_utility,
    l4_query_policy,
    l4_utility,
    mle_belief,
    mle_objective,
    teaching_candidates,
    tom_posterior,
)
from .experiments import (
    ConfigError,
    RunReport,
    ScenarioConfig,
    bimodal_config,
    derive_subseed,
    run_belief_correction,
    run_bimodal_identifiability,
    run_interaction_loop,
    run_unimodal_identifiability,
)

__version__ = "0.1.0"
