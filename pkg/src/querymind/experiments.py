"""Seeded end-to-end scenarios: identifiability studies, belief-correction
teaching, and generic learner-teacher interaction loops.

Every run is a pure function of its :class:`ScenarioConfig`; randomness flows
through sub-seeds derived from the master seed with SHA-256, so reports
serialize byte-identically across runs and platforms.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .model import (
    ABSOLUTE_DISTANCE,
    REWARD_FORMS,
    BeliefParams,
    GridBelief,
    LabeledExample,
    Query,
    ThetaGrid,
    discretize_belief,
    sample_answer,
    uniform_belief,
)
from .inference import (
    QueryGrid,
    eig_map,
    entropy,
    posterior_update,
    softmax_policy,
)
from .agents import (
    MleSearchConfig,
    l2_query_policy,
    l2_select_query,
    l3_answer_policy,
    l3_teaching_utilities,
    mle_belief,
)


class ConfigError(ValueError):
    """A scenario configuration is inconsistent or out of range."""


def derive_subseed(master_seed: int, label: str, index: int) -> int:
    """Stable 64-bit sub-seed for a named random stream.

    SHA-256 over the (seed, label, index) triple keeps streams independent
    and platform-invariant.
    """
    if not label:
        raise ConfigError("sub-seed label must be nonempty")
    payload = f"{master_seed}\x1f{label}\x1f{index}".encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big")


_SELECTION_MODES = ("sample", "argmax")


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved inputs of one experiment run."""

    prior: BeliefParams = BeliefParams(-3.0, 1.0, 3.0, 1.0, 0.9)
    theta_true: float = 2.0
    n_queries: int = 5
    beta_a: float = 50.0
    beta_h: float = 50.0
    reward_form: str = ABSOLUTE_DISTANCE
    theta_grid: ThetaGrid = ThetaGrid(-6.0, 6.0, 241)
    query_grid: QueryGrid = QueryGrid(-6.0, 6.0, 49)
    seed: int = 0
    mle: MleSearchConfig = MleSearchConfig()
    exact_likelihood: bool = False
    selection: str = "sample"

    def __post_init__(self) -> None:
        if self.n_queries < 1:
            raise ConfigError(f"n_queries must be >= 1, got {self.n_queries}")
        if self.selection not in _SELECTION_MODES:
            raise ConfigError(f"selection must be one of {_SELECTION_MODES}")
        if self.reward_form not in REWARD_FORMS:
            raise ConfigError(f"reward form must be one of {REWARD_FORMS}")
        if self.beta_a < 0 or self.beta_h < 0:
            raise ConfigError("rationality coefficients must be nonnegative")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")


def bimodal_config(seed: int = 0) -> ScenarioConfig:
    """Defaults for the two-group identifiability study: tighter modes,
    near-even group weight, and a larger query budget."""
    return ScenarioConfig(prior=BeliefParams(-3.0, 0.5, 3.0, 0.5, 0.6),
                          n_queries=20, seed=seed)


@dataclass
class RunReport:
    """Everything one scenario produced, minus wall-clock noise.

    ``timings`` is carried for the manifest but excluded from the canonical
    serialization so identical configs serialize byte-identically.
    """

    kind: str
    config: ScenarioConfig
    queries: list[Query] = field(default_factory=list)
    estimated: BeliefParams | None = None
    eig_true: np.ndarray | None = None
    eig_estimated: np.ndarray | None = None
    correlation: float | None = None
    mode_locations: tuple[float, float] | None = None
    p_z_hat: float | None = None
    belief_true: GridBelief | None = None
    belief_estimated: GridBelief | None = None
    teaching_utils_uniform: np.ndarray | None = None
    teaching_utils_adaptive: np.ndarray | None = None
    teaching_policy_uniform: np.ndarray | None = None
    teaching_policy_adaptive: np.ndarray | None = None
    argmax_uniform: LabeledExample | None = None
    argmax_adaptive: LabeledExample | None = None
    learner_mass_after_uniform: float | None = None
    learner_mass_after_adaptive: float | None = None
    trace: list[tuple[int, float, float, int, float]] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def canonical_dict(self) -> dict:
        def arr(a):
            return None if a is None else [float(v) for v in a]

        out = {
            "kind": self.kind,
            "config": _config_dict(self.config),
            "queries": [[q.x1, q.x2] for q in self.queries],
            "estimated": None if self.estimated is None else list(self.estimated.astuple()),
            "eig_true": arr(self.eig_true),
            "eig_estimated": arr(self.eig_estimated),
            "correlation": self.correlation,
            "mode_locations": None if self.mode_locations is None else list(self.mode_locations),
            "p_z_hat": self.p_z_hat,
            "belief_true": None if self.belief_true is None else arr(self.belief_true.mass),
            "belief_estimated": (None if self.belief_estimated is None
                                 else arr(self.belief_estimated.mass)),
            "teaching_utils_uniform": arr(self.teaching_utils_uniform),
            "teaching_utils_adaptive": arr(self.teaching_utils_adaptive),
            "teaching_policy_uniform": arr(self.teaching_policy_uniform),
            "teaching_policy_adaptive": arr(self.teaching_policy_adaptive),
            "argmax_uniform": _example_dict(self.argmax_uniform),
            "argmax_adaptive": _example_dict(self.argmax_adaptive),
            "learner_mass_after_uniform": self.learner_mass_after_uniform,
            "learner_mass_after_adaptive": self.learner_mass_after_adaptive,
            "trace": [list(row) for row in self.trace],
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True, indent=1)


def _example_dict(ex: LabeledExample | None):
    if ex is None:
        return None
    return {"x1": ex.query.x1, "x2": ex.query.x2, "y": ex.y}


def _config_dict(cfg: ScenarioConfig) -> dict:
    return {
        "prior": list(cfg.prior.astuple()),
        "theta_true": cfg.theta_true,
        "n_queries": cfg.n_queries,
        "beta_a": cfg.beta_a,
        "beta_h": cfg.beta_h,
        "reward_form": cfg.reward_form,
        "theta_grid": [cfg.theta_grid.lo, cfg.theta_grid.hi, cfg.theta_grid.n_points],
        "query_grid": [cfg.query_grid.feature_lo, cfg.query_grid.feature_hi,
                       cfg.query_grid.n_per_axis],
        "seed": cfg.seed,
        "mle": {
            "mu1": [cfg.mle.mu1.lo, cfg.mle.mu1.hi, cfg.mle.mu1.count],
            "mu2": [cfg.mle.mu2.lo, cfg.mle.mu2.hi, cfg.mle.mu2.count],
            "sigma1": [cfg.mle.sigma1.lo, cfg.mle.sigma1.hi, cfg.mle.sigma1.count],
            "sigma2": [cfg.mle.sigma2.lo, cfg.mle.sigma2.hi, cfg.mle.sigma2.count],
            "p_z": [cfg.mle.p_z.lo, cfg.mle.p_z.hi, cfg.mle.p_z.count],
            "n_refine_iters": cfg.mle.n_refine_iters,
            "refine_shrink": cfg.mle.refine_shrink,
        },
        "exact_likelihood": cfg.exact_likelihood,
        "selection": cfg.selection,
    }


def sample_queries(cfg: ScenarioConfig, belief: GridBelief) -> list[Query]:
    """Draw the scenario's query batch from the level-2 policy of ``belief``."""
    policy = l2_query_policy(belief, cfg.query_grid, cfg.beta_a, cfg.reward_form)
    rng = np.random.default_rng(derive_subseed(cfg.seed, "queries", 0))
    return [l2_select_query(policy, cfg.selection, rng) for _ in range(cfg.n_queries)]


def _nondiagonal_mask(qg: QueryGrid) -> np.ndarray:
    cands = qg.candidates
    return cands[:, 0] != cands[:, 1]


def _identifiability(cfg: ScenarioConfig, kind: str) -> RunReport:
    report = RunReport(kind=kind, config=cfg)
    t0 = time.perf_counter()
    belief = discretize_belief(cfg.prior, cfg.theta_grid)
    report.belief_true = belief
    report.queries = sample_queries(cfg, belief)
    report.timings["sample_queries"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    est = mle_belief(report.queries, cfg.mle, cfg.query_grid, cfg.theta_grid,
                     cfg.reward_form, cfg.exact_likelihood, cfg.beta_a)
    report.estimated = est
    report.timings["mle_belief"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    report.belief_estimated = discretize_belief(est, cfg.theta_grid)
    report.eig_true = eig_map(belief, cfg.query_grid, cfg.reward_form)
    report.eig_estimated = eig_map(report.belief_estimated, cfg.query_grid, cfg.reward_form)
    mask = _nondiagonal_mask(cfg.query_grid)
    report.correlation = float(np.corrcoef(report.eig_true[mask],
                                           report.eig_estimated[mask])[0, 1])
    report.mode_locations = (est.mu1, est.mu2)
    report.p_z_hat = est.p_z
    report.timings["eig_maps"] = time.perf_counter() - t0
    return report


def run_unimodal_identifiability(cfg: ScenarioConfig) -> RunReport:
    """Recover a dominantly unimodal belief from its own sampled queries."""
    return _identifiability(cfg, "unimodal_identifiability")


def run_bimodal_identifiability(cfg: ScenarioConfig) -> RunReport:
    """Recover a two-group belief; also reports mode locations and group weight."""
    return _identifiability(cfg, "bimodal_identifiability")


def run_belief_correction(cfg: ScenarioConfig) -> RunReport:
    """Teaching under a false learner belief, with and without query-based inference.

    The learner's actual belief is ``cfg.prior`` (false: it discounts the mode
    containing ``theta_true``).  The teacher either assumes a uniform learner
    belief or attributes one from the observed queries, then picks the
    highest-utility labeled example.  Both chosen examples are also scored by
    the posterior mass they would produce on the true parameter under the
    learner's actual belief.
    """
    report = RunReport(kind="belief_correction", config=cfg)
    t0 = time.perf_counter()
    false_belief = discretize_belief(cfg.prior, cfg.theta_grid)
    report.belief_true = false_belief
    report.queries = sample_queries(cfg, false_belief)
    report.timings["sample_queries"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    inferred = mle_belief(report.queries, cfg.mle, cfg.query_grid, cfg.theta_grid,
                          cfg.reward_form, cfg.exact_likelihood, cfg.beta_a)
    report.estimated = inferred
    report.belief_estimated = discretize_belief(inferred, cfg.theta_grid)
    report.timings["mle_belief"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    qg = cfg.query_grid
    u_uniform = l3_teaching_utilities(cfg.theta_true, [uniform_belief(cfg.theta_grid)],
                                      None, qg, cfg.reward_form)
    u_adaptive = l3_teaching_utilities(cfg.theta_true, [report.belief_estimated],
                                       None, qg, cfg.reward_form)
    report.teaching_utils_uniform = u_uniform
    report.teaching_utils_adaptive = u_adaptive
    report.teaching_policy_uniform = softmax_policy(u_uniform, cfg.beta_h)
    report.teaching_policy_adaptive = softmax_policy(u_adaptive, cfg.beta_h)

    def take_argmax(utils: np.ndarray) -> LabeledExample:
        idx = int(np.argmax(utils))
        cand, y = divmod(idx, 2)
        return LabeledExample(qg.query_at(cand), y)

    report.argmax_uniform = take_argmax(u_uniform)
    report.argmax_adaptive = take_argmax(u_adaptive)

    target = cfg.theta_grid.index_of(cfg.theta_true)

    def learner_mass(ex: LabeledExample) -> float:
        post = posterior_update(false_belief, ex.query, ex.y, cfg.reward_form)
        return float(post.mass[target])

    report.learner_mass_after_uniform = learner_mass(report.argmax_uniform)
    report.learner_mass_after_adaptive = learner_mass(report.argmax_adaptive)
    report.timings["teaching"] = time.perf_counter() - t0
    return report


_VALID_PAIRINGS = {(2, 1), (2, 3)}


def run_interaction_loop(cfg: ScenarioConfig, learner_level: int, teacher_level: int,
                         rounds: int) -> RunReport:
    """Alternating query/answer rounds with the learner's posterior threaded through.

    The level-2 learner asks from its softmax policy and updates literally.
    A level-1 teacher answers from the choice model at ``theta_true``; a
    level-3 teacher answers strategically, attributing the learner's current
    belief exactly (a single-particle second-order belief kept in sync).
    """
    if rounds < 1:
        raise ConfigError(f"rounds must be >= 1, got {rounds}")
    if (learner_level, teacher_level) not in _VALID_PAIRINGS:
        raise ConfigError(
            f"unsupported level pairing learner={learner_level}, teacher={teacher_level}; "
            f"supported: learner 2 with teacher 1 or 3")
    report = RunReport(kind=f"loop_l{learner_level}_vs_l{teacher_level}", config=cfg)
    t0 = time.perf_counter()
    belief = discretize_belief(cfg.prior, cfg.theta_grid)
    rng_q = np.random.default_rng(derive_subseed(cfg.seed, "loop-queries", 0))
    rng_a = np.random.default_rng(derive_subseed(cfg.seed, "loop-answers", 0))
    for t in range(rounds):
        policy = l2_query_policy(belief, cfg.query_grid, cfg.beta_a, cfg.reward_form)
        q = l2_select_query(policy, cfg.selection, rng_q)
        if teacher_level == 1:
            y = sample_answer(cfg.theta_true, q, cfg.reward_form, rng_a)
        else:
            p1 = l3_answer_policy(cfg.theta_true, q, [belief], None, cfg.beta_h,
                                  cfg.reward_form)
            y = 1 if rng_a.random() < p1 else 0
        belief = posterior_update(belief, q, y, cfg.reward_form)
        report.trace.append((t, q.x1, q.x2, y, entropy(belief)))
    report.timings["loop"] = time.perf_counter() - t0
    return report


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(cfg, seed=seed)
