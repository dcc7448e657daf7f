"""Recursive agent ladder built on the grid machinery.

Level 2 asks queries by softmax over expected information gain.  Level 3
attributes a belief to the asker from its queries (either by maximum
likelihood over the mixture family or by Bayes over a particle ensemble) and
teaches strategically.  Level 4 asks queries that also make its own belief
identifiable, and level 5 scores a query's intent by the Bayes factor between
the literal and the identifiability-seeking asker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, xlogy

from .model import (
    ABSOLUTE_DISTANCE,
    BeliefParams,
    GridBelief,
    InvalidInputError,
    LabeledExample,
    Query,
    ThetaGrid,
    canonicalize,
    discretize_belief,
)
from .inference import (
    LN2,
    ImpossibleEvidenceError,
    QueryGrid,
    QueryPolicy,
    eig_map,
    eig_rows,
    expected_info_gain,
    likelihood_matrix,
    posterior_update,
    sample_index,
    softmax_policy,
)

# Batch size for vectorized search over candidate mixtures; bounds peak
# memory at roughly batch * n_grid_points * 8 bytes per temporary.
_SEARCH_CHUNK = 4096


@dataclass(frozen=True)
class BeliefEnsemble:
    """Weighted finite set of candidate beliefs (a belief about a belief)."""

    particles: tuple[BeliefParams, ...]
    weights: np.ndarray

    def __post_init__(self) -> None:
        particles = tuple(self.particles)
        object.__setattr__(self, "particles", particles)
        if len(particles) < 1:
            raise InvalidInputError("ensemble needs at least one particle")
        for p in particles:
            if not p.is_canonical:
                raise InvalidInputError(f"particle {p.astuple()} is not canonical")
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if w.shape != (len(particles),):
            raise InvalidInputError("weight count does not match particle count")
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise InvalidInputError("weights must be nonnegative and sum to 1 within 1e-9")

    @classmethod
    def single(cls, bp: BeliefParams) -> "BeliefEnsemble":
        return cls((canonicalize(bp),), np.array([1.0]))


@dataclass(frozen=True)
class ParamRange:
    """Inclusive search range with a fixed grid count."""

    lo: float
    hi: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise InvalidInputError("range count must be >= 1")
        if self.lo > self.hi:
            raise InvalidInputError(f"range lo {self.lo} > hi {self.hi}")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([0.5 * (self.lo + self.hi)])
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class MleSearchConfig:
    """Coarse grid over the canonical mixture space plus local refinement.

    Sigma ranges are given in sigma units but gridded uniformly in log space.
    Each refinement pass re-grids every parameter on a window around the
    incumbent whose width shrinks by ``refine_shrink`` per pass; windows are
    truncated so the search never leaves the coarse ranges.
    """

    mu1: ParamRange = ParamRange(-6.0, 0.0, 13)
    mu2: ParamRange = ParamRange(0.0, 6.0, 13)
    sigma1: ParamRange = ParamRange(0.25, 2.0, 4)
    sigma2: ParamRange = ParamRange(0.25, 2.0, 4)
    p_z: ParamRange = ParamRange(0.1, 0.9, 9)
    n_refine_iters: int = 3
    refine_shrink: float = 0.5

    def __post_init__(self) -> None:
        if self.n_refine_iters < 0:
            raise InvalidInputError("n_refine_iters must be >= 0")
        if not 0.0 < self.refine_shrink < 1.0:
            raise InvalidInputError("refine_shrink must be in (0, 1)")
        if self.sigma1.lo <= 0 or self.sigma2.lo <= 0:
            raise InvalidInputError("sigma ranges must be positive")


def l2_query_policy(b: GridBelief, qg: QueryGrid, beta_a: float,
                    form: str = ABSOLUTE_DISTANCE) -> QueryPolicy:
    """Softmax-over-EIG query policy of the literal active learner."""
    return QueryPolicy(qg, softmax_policy(eig_map(b, qg, form), beta_a))


def l2_select_query(policy: QueryPolicy, mode: str = "sample",
                    rng: np.random.Generator | None = None) -> Query:
    """Realize one query from the policy.

    ``sample`` draws by inverse CDF; ``argmax`` takes the most probable
    candidate, breaking ties toward the lowest enumeration index.
    """
    if mode == "argmax":
        idx = int(np.argmax(policy.probs))
    elif mode == "sample":
        if rng is None:
            raise InvalidInputError("sample mode needs a random generator")
        idx = sample_index(policy.probs, rng)
    else:
        raise InvalidInputError(f"unknown selection mode {mode!r}")
    return policy.grid.query_at(idx)


def _mixture_mass_batch(params: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Normalized grid mass for a (B, 5) batch of mixture parameters."""
    mu1 = params[:, 0][:, None]
    s1 = params[:, 1][:, None]
    mu2 = params[:, 2][:, None]
    s2 = params[:, 3][:, None]
    pz = params[:, 4][:, None]
    th = points[None, :]
    inv_sqrt_2pi = 1.0 / math.sqrt(2.0 * math.pi)
    z1 = (th - mu1) / s1
    z2 = (th - mu2) / s2
    dens = pz * (inv_sqrt_2pi / s1) * np.exp(-0.5 * z1 * z1) \
        + (1.0 - pz) * (inv_sqrt_2pi / s2) * np.exp(-0.5 * z2 * z2)
    dens = np.where(dens < 1e-300, 0.0, dens)
    total = np.sum(dens, axis=1)
    bad = total <= 0.0
    if np.any(bad):
        # Unrepresentable candidates score -inf later instead of erroring out.
        total = np.where(bad, 1.0, total)
        dens[bad] = 0.0
    mass = dens / total[:, None]
    return mass


def _summed_eig_batch(mass: np.ndarray, lik1: np.ndarray) -> np.ndarray:
    """Sum over queries of the expected information gain for each mass row.

    Algebraically identical to :func:`querymind.inference.eig_rows` summed
    over the (N, K) likelihood rows, but organized as fused multiply-sums so
    a large batch of candidate beliefs stays cheap:
    ``H(post_y) = ln p_y - (1/p_y) * sum_k t_yk ln t_yk`` with
    ``t_y = mass * lik_y``.  All reductions are fixed-order einsum loops, so
    results do not depend on BLAS threading.
    """
    a = xlogy(mass, mass)
    neg_h = np.einsum("bk->b", a)
    row_sum = np.einsum("bk->b", mass)
    total = np.zeros(mass.shape[0])
    for lik in lik1:
        lik0 = 1.0 - lik
        s1 = np.einsum("bk,k->b", mass, lik)
        s0 = row_sum - s1
        # sum_k t ln t = sum_k (m ln m) * lik + sum_k m * (lik ln lik)
        a1 = np.einsum("bk,k->b", a, lik)
        a0 = neg_h - a1
        q1 = a1 + np.einsum("bk,k->b", mass, xlogy(lik, lik))
        q0 = a0 + np.einsum("bk,k->b", mass, xlogy(lik0, lik0))
        with np.errstate(divide="ignore", invalid="ignore"):
            h1 = np.log(s1) - q1 / s1
            h0 = np.log(s0) - q0 / s0
        total += s1 * (-neg_h - h1) + s0 * (-neg_h - h0)
    return total


def _objective_batch(params: np.ndarray, lik1: np.ndarray, points: np.ndarray,
                     exact: bool, beta_a: float, grid_lik1: np.ndarray | None,
                     n_queries: int) -> np.ndarray:
    """Summed EIG of the dataset queries for each parameter row.

    ``lik1`` is (N, K) over the non-diagonal dataset queries (diagonals add
    zero gain); in exact mode ``grid_lik1`` is the (C, K) likelihood matrix
    of the full candidate grid and the result is the normalized
    log-likelihood under the softmax query policy, where every one of the
    ``n_queries`` dataset queries contributes a normalizer term.
    """
    out = np.empty(params.shape[0])
    for start in range(0, params.shape[0], _SEARCH_CHUNK):
        chunk = params[start:start + _SEARCH_CHUNK]
        mass = _mixture_mass_batch(chunk, points)
        empty = mass.sum(axis=1) <= 0.0
        total = _summed_eig_batch(mass, lik1)
        if exact:
            if grid_lik1 is None:
                raise InvalidInputError("exact mode needs the candidate-grid likelihoods")
            log_z = np.empty(chunk.shape[0])
            for r in range(chunk.shape[0]):
                emap = eig_rows(mass[r:r + 1], grid_lik1)
                log_z[r] = logsumexp(beta_a * emap)
            total = beta_a * total - n_queries * log_z
        total[empty] = -np.inf
        out[start:start + _SEARCH_CHUNK] = total
    return out


def _dataset_likelihoods(queries: Sequence[Query], points: np.ndarray,
                         form: str) -> np.ndarray:
    """(N, K) answer-1 likelihoods; diagonal queries contribute zero EIG."""
    rows = []
    for q in queries:
        if q.is_diagonal:
            continue
        rows.append(np.array([[q.x1, q.x2]]))
    if not rows:
        return np.empty((0, points.size))
    cands = np.concatenate(rows, axis=0)
    return likelihood_matrix(points, cands, form)


def mle_objective(queries: Sequence[Query], bp: BeliefParams, qg: QueryGrid,
                  grid: ThetaGrid, form: str = ABSOLUTE_DISTANCE,
                  exact: bool = False, beta_a: float = 50.0) -> float:
    """Attribution score of a candidate belief for an observed query set.

    The default is the summed expected information gain of the observed
    queries under the candidate belief (the query-policy normalizer is
    dropped).  With ``exact=True`` the score is the normalized log-likelihood
    of the queries under the softmax policy over the candidate grid,
    ``sum_i [beta_a * EIG(q_i) - log sum_xi exp(beta_a * EIG(xi))]``.
    """
    if len(queries) == 0:
        raise InvalidInputError("query dataset must be nonempty")
    b = discretize_belief(bp, grid)
    gains = [expected_info_gain(b, q, form) for q in queries]
    if not exact:
        return float(sum(gains))
    log_z = float(logsumexp(beta_a * eig_map(b, qg, form)))
    return float(sum(beta_a * g - log_z for g in gains))


def _clip_window(center: float, width: float, lo: float, hi: float) -> tuple[float, float]:
    half = 0.5 * width
    return max(lo, center - half), min(hi, center + half)


def mle_belief(queries: Sequence[Query], cfg: MleSearchConfig, qg: QueryGrid,
               grid: ThetaGrid, form: str = ABSOLUTE_DISTANCE,
               exact: bool = False, beta_a: float = 50.0) -> BeliefParams:
    """Maximum-likelihood belief attribution by grid search plus refinement.

    Scans the full coarse grid of canonical mixture parameters, then runs
    ``n_refine_iters`` passes of the same-sized grid on shrinking windows
    around the incumbent.  Returns the canonical best candidate; its score is
    at least that of every coarse-grid point.  Ties resolve to the lowest
    enumeration index.
    """
    if len(queries) == 0:
        raise InvalidInputError("query dataset must be nonempty")
    points = grid.points
    lik1 = _dataset_likelihoods(queries, points, form)
    grid_lik1 = likelihood_matrix(points, qg.candidates, form) if exact else None

    axes = [
        cfg.mu1.values(),
        cfg.mu2.values(),
        np.log(cfg.sigma1.values()),
        np.log(cfg.sigma2.values()),
        cfg.p_z.values(),
    ]
    widths = [
        cfg.mu1.hi - cfg.mu1.lo,
        cfg.mu2.hi - cfg.mu2.lo,
        math.log(cfg.sigma1.hi) - math.log(cfg.sigma1.lo),
        math.log(cfg.sigma2.hi) - math.log(cfg.sigma2.lo),
        cfg.p_z.hi - cfg.p_z.lo,
    ]
    counts = [cfg.mu1.count, cfg.mu2.count, cfg.sigma1.count, cfg.sigma2.count, cfg.p_z.count]
    bounds = [(cfg.mu1.lo, cfg.mu1.hi), (cfg.mu2.lo, cfg.mu2.hi),
              (math.log(cfg.sigma1.lo), math.log(cfg.sigma1.hi)),
              (math.log(cfg.sigma2.lo), math.log(cfg.sigma2.hi)),
              (cfg.p_z.lo, cfg.p_z.hi)]

    best_params: np.ndarray | None = None
    best_value = -np.inf
    for _ in range(1 + cfg.n_refine_iters):
        mesh = np.meshgrid(*axes, indexing="ij")
        cand = np.stack([m.ravel() for m in mesh], axis=1)
        # Search coordinates are (mu1, mu2, log s1, log s2, p_z); the mass
        # kernel wants (mu1, s1, mu2, s2, p_z) in sigma units.
        params = np.column_stack([cand[:, 0], np.exp(cand[:, 2]),
                                  cand[:, 1], np.exp(cand[:, 3]), cand[:, 4]])
        values = _objective_batch(params, lik1, points, exact, beta_a, grid_lik1,
                                  len(queries))
        i = int(np.argmax(values))
        if best_params is None or values[i] > best_value:
            best_value = float(values[i])
            best_params = cand[i].copy()
        widths = [w * cfg.refine_shrink for w in widths]
        axes = []
        for dim in range(5):
            lo, hi = _clip_window(best_params[dim], widths[dim], *bounds[dim])
            if counts[dim] == 1:
                axes.append(np.array([best_params[dim]]))
            else:
                axes.append(np.linspace(lo, hi, counts[dim]))
    bp = BeliefParams(best_params[0], math.exp(best_params[2]),
                      best_params[1], math.exp(best_params[3]), best_params[4])
    return canonicalize(bp)


def _l2_policy_matrix(ensemble: BeliefEnsemble, qg: QueryGrid, grid: ThetaGrid,
                      beta_a: float, form: str) -> np.ndarray:
    """(J, C) matrix of each particle's level-2 query policy."""
    rows = []
    for bp in ensemble.particles:
        b = discretize_belief(bp, grid)
        rows.append(l2_query_policy(b, qg, beta_a, form).probs)
    return np.stack(rows, axis=0)


def tom_posterior(ensemble: BeliefEnsemble, observed: Query, qg: QueryGrid,
                  grid: ThetaGrid, beta_a: float,
                  form: str = ABSOLUTE_DISTANCE) -> BeliefEnsemble:
    """Reweight belief particles by how likely each was to ask the observed query.

    The likelihood of a particle is its normalized level-2 policy probability
    of the observed query.
    """
    idx = qg.index_of(observed)
    lik = _l2_policy_matrix(ensemble, qg, grid, beta_a, form)[:, idx]
    unnorm = ensemble.weights * lik
    total = float(np.sum(unnorm))
    if total <= 0.0:
        raise ImpossibleEvidenceError(f"query {observed} impossible under every particle")
    return BeliefEnsemble(ensemble.particles, unnorm / total)


def teaching_candidates(qg: QueryGrid) -> list[LabeledExample]:
    """Full data-point candidates in (candidate index, answer) order."""
    out = []
    for x1, x2 in qg.candidates:
        q = Query(float(x1), float(x2))
        out.append(LabeledExample(q, 0))
        out.append(LabeledExample(q, 1))
    return out


def l3_teaching_utility(tc: LabeledExample, theta_true: float, prior: GridBelief,
                        form: str = ABSOLUTE_DISTANCE) -> float:
    """Posterior mass the learner would place on the true ideal point's cell."""
    target = prior.grid.index_of(theta_true)
    post = posterior_update(prior, tc.query, tc.y, form)
    return float(post.mass[target])


def l3_teaching_utilities(theta_true: float, priors: Sequence[GridBelief],
                          weights: Sequence[float] | None, qg: QueryGrid,
                          form: str = ABSOLUTE_DISTANCE) -> np.ndarray:
    """Ensemble-averaged teaching utility of every (query, answer) candidate.

    Output order matches :func:`teaching_candidates`: index ``2c + y`` for
    candidate ``c``.  Expectation is over the teacher's uncertainty about the
    learner's belief, given as grid beliefs with weights.
    """
    if len(priors) == 0:
        raise InvalidInputError("need at least one learner-belief particle")
    if weights is None:
        w = np.full(len(priors), 1.0 / len(priors))
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(priors),) or np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise InvalidInputError("weights must be nonnegative and sum to 1")
    cands = qg.candidates
    total = np.zeros(2 * cands.shape[0])
    for weight, prior in zip(w, priors):
        target = prior.grid.index_of(theta_true)
        lik1 = likelihood_matrix(prior.grid.points, cands, form)
        t1 = prior.mass[None, :] * lik1
        p1 = np.sum(t1, axis=1)
        u1 = t1[:, target] / p1
        t0 = prior.mass[None, :] * (1.0 - lik1)
        p0 = np.sum(t0, axis=1)
        u0 = t0[:, target] / p0
        total[0::2] += weight * u0
        total[1::2] += weight * u1
    return total


def l3_teaching_policy(theta_true: float, priors: Sequence[GridBelief],
                       weights: Sequence[float] | None, qg: QueryGrid, beta_h: float,
                       form: str = ABSOLUTE_DISTANCE) -> np.ndarray:
    """Softmax teaching policy over full data points (query plus answer)."""
    return softmax_policy(l3_teaching_utilities(theta_true, priors, weights, qg, form), beta_h)


def l3_answer_policy(theta_true: float, q: Query, priors: Sequence[GridBelief],
                     weights: Sequence[float] | None, beta_h: float,
                     form: str = ABSOLUTE_DISTANCE) -> float:
    """Probability that a strategic teacher answers ``y = 1`` to a fixed query."""
    if len(priors) == 0:
        raise InvalidInputError("need at least one learner-belief particle")
    if weights is None:
        w = np.full(len(priors), 1.0 / len(priors))
    else:
        w = np.asarray(weights, dtype=np.float64)
    u = np.zeros(2)
    for weight, prior in zip(w, priors):
        for y in (0, 1):
            u[y] += weight * l3_teaching_utility(LabeledExample(q, y), theta_true, prior, form)
    probs = softmax_policy(u, beta_h)
    return float(probs[1])


def l4_utility(q: Query, true_index: int, ensemble: BeliefEnsemble, qg: QueryGrid,
               grid: ThetaGrid, beta_a: float, form: str = ABSOLUTE_DISTANCE) -> float:
    """How identifiable the asker's true belief is after this query is observed.

    The true belief must be one of the ensemble particles; the utility is its
    posterior weight under the observer's particle reweighting.
    """
    if not 0 <= true_index < len(ensemble.particles):
        raise InvalidInputError(f"true_index {true_index} out of range")
    return float(tom_posterior(ensemble, q, qg, grid, beta_a, form).weights[true_index])


def _l4_utilities(true_index: int, ensemble: BeliefEnsemble, lam: float,
                  policy_matrix: np.ndarray, emap_true: np.ndarray) -> np.ndarray:
    """Mixed information-seeking / identifiability utility per candidate.

    The information term is normalized by ln 2 (the EIG ceiling for a binary
    answer) so both terms live on [0, 1]; the mix is then rescaled by ln 2 so
    that ``lam = 0`` reproduces the literal policy's utilities bit for bit.
    """
    marginal = np.sum(ensemble.weights[:, None] * policy_matrix, axis=0)
    ident = ensemble.weights[true_index] * policy_matrix[true_index] / marginal
    return (1.0 - lam) * emap_true + lam * LN2 * ident


def l4_query_policy(true_index: int, ensemble: BeliefEnsemble, lam: float,
                    qg: QueryGrid, grid: ThetaGrid, beta_a: float,
                    form: str = ABSOLUTE_DISTANCE) -> QueryPolicy:
    """Query policy trading off information gain against belief identifiability."""
    if not 0 <= true_index < len(ensemble.particles):
        raise InvalidInputError(f"true_index {true_index} out of range")
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError(f"lambda must be in [0, 1], got {lam}")
    pmat = _l2_policy_matrix(ensemble, qg, grid, beta_a, form)
    b_true = discretize_belief(ensemble.particles[true_index], grid)
    emap_true = eig_map(b_true, qg, form)
    u = _l4_utilities(true_index, ensemble, lam, pmat, emap_true)
    return QueryPolicy(qg, softmax_policy(u, beta_a))


def bayes_factor(q: Query, ensemble: BeliefEnsemble, beta_a: float, lam: float,
                 qg: QueryGrid, grid: ThetaGrid, form: str = ABSOLUTE_DISTANCE) -> float:
    """Literal-vs-rhetorical evidence ratio for an observed query.

    Marginalizes both hypotheses over the ensemble: the numerator averages the
    particles' level-2 policies, the denominator the level-4 policies where
    each particle plays the role of the asker's true belief.  Values above 1
    favor the information-seeking reading.
    """
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError(f"lambda must be in [0, 1], got {lam}")
    idx = qg.index_of(q)
    pmat = _l2_policy_matrix(ensemble, qg, grid, beta_a, form)
    numerator = float(np.sum(ensemble.weights * pmat[:, idx]))
    denominator = 0.0
    for j, bp in enumerate(ensemble.particles):
        emap_j = eig_map(discretize_belief(bp, grid), qg, form)
        u = _l4_utilities(j, ensemble, lam, pmat, emap_j)
        denominator += float(ensemble.weights[j]) * float(softmax_policy(u, beta_a)[idx])
    if denominator <= 0.0:
        raise ImpossibleEvidenceError("level-4 marginal likelihood underflowed to zero")
    return numerator / denominator
