"""Annealed Metropolis-Hastings sampling over trees and model parameters.

The chain state bundles a rooted binary tree, the two-state model
parameters, and a temperature. Proposals mix nearest-neighbour
interchanges, single-branch rescaling, and parameter random walks.
The acceptance test divides the log-posterior difference by the
current temperature; the temperature decays geometrically from its
starting value down to 1, after which the chain is a standard sampler
and its visits can be summarized into consensus supports.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .phylo import CharacterMatrix, SubstParams, pruning_loglik
from .tree import Node, Tree, emit_newick, majority_rule_consensus, random_topology


class NoInternalEdgeError(ValueError):
    """Topology moves need at least one internal edge."""


class TooFewLanguagesError(ValueError):
    """Tree inference needs at least three languages."""


class NumericError(ArithmeticError):
    """The posterior became NaN, which no move can recover from."""


@dataclass(frozen=True)
class ChainConfig:
    t0: float = 50.0
    cooling: float = 0.999
    max_iters: int = 50_000
    stop_window: int = 2_000
    seed: int = 0
    branch_rate: float = 10.0
    pi1_bounds: tuple[float, float] = (0.0, 1.0)
    move_weights: tuple[float, float, float] = (0.4, 0.4, 0.2)
    branch_scale: float = 1.0
    pi1_step: float = 0.1
    mu_step: float = 0.3
    sample_every: int = 10
    debug: bool = False

    def __post_init__(self) -> None:
        if self.t0 < 1.0:
            raise ValueError("initial temperature must be >= 1")
        if not (0.0 < self.cooling < 1.0):
            raise ValueError("cooling factor must lie in (0, 1)")
        if min(self.max_iters, self.stop_window, self.sample_every) <= 0:
            raise ValueError("iteration controls must be positive")
        if self.branch_rate <= 0:
            raise ValueError("branch rate must be positive")
        if any(w < 0 for w in self.move_weights) or sum(self.move_weights) <= 0:
            raise ValueError("move weights must be non-negative, not all zero")


@dataclass(frozen=True)
class McmcState:
    tree: Tree
    params: SubstParams
    log_posterior: float
    temperature: float


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    log_posterior: float
    temperature: float
    pi1: float
    mu: float
    accepted: bool
    newick: str | None = None


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("trace iterations must be strictly increasing")
        self.records.append(record)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write("iter,logpost,temperature,pi1,mu,accepted\n")
            for r in self.records:
                handle.write(
                    f"{r.iteration},{r.log_posterior!r},{r.temperature!r},"
                    f"{r.pi1!r},{r.mu!r},{int(r.accepted)}\n"
                )


def log_prior(tree: Tree, params: SubstParams, config: ChainConfig) -> float:
    """Uniform topology, Exponential(branch_rate) branch lengths,
    Uniform pi1 on its bounds, Exponential(1) rate."""
    lo, hi = config.pi1_bounds
    if not (lo < params.pi1 < hi):
        return -math.inf
    if params.mu <= 0:
        return -math.inf
    total = -math.log(hi - lo) - params.mu
    rate = config.branch_rate
    for node in tree.postorder():
        if node is tree.root:
            continue
        if node.length is None or node.length <= 0:
            return -math.inf
        total += math.log(rate) - rate * node.length
    return total


def log_posterior(
    tree: Tree, params: SubstParams, data: CharacterMatrix, config: ChainConfig
) -> float:
    prior = log_prior(tree, params, config)
    if prior == -math.inf:
        return -math.inf
    return pruning_loglik(tree, data, params) + prior


def _internal_edges(tree: Tree) -> list[tuple[Node, Node]]:
    """Edges (parent, child) whose child is itself internal."""
    edges = []
    for node in tree.preorder():
        for child in node.children:
            if not child.is_leaf:
                edges.append((node, child))
    return edges


def nni_neighbors(tree: Tree) -> list[Tree]:
    """All trees one nearest-neighbour interchange away, in fixed order.

    For each internal edge parent-child the child's two subtrees can
    each swap places with the child's sibling, giving two neighbours
    per edge.
    """
    neighbors = []
    edges = _internal_edges(tree)
    for edge_idx in range(len(edges)):
        for swap_idx in range(2):
            clone = tree.copy()
            parent, child = _internal_edges(clone)[edge_idx]
            sibling_idx = next(
                i for i, c in enumerate(parent.children) if c is not child
            )
            sibling = parent.children[sibling_idx]
            grandchild = child.children[swap_idx]
            parent.children[sibling_idx] = grandchild
            child.children[swap_idx] = sibling
            neighbors.append(clone)
    return neighbors


def propose_nni(tree: Tree, rng: np.random.Generator) -> tuple[Tree, float]:
    """Swap a random subtree pair across a random internal edge; symmetric."""
    edges = _internal_edges(tree)
    if not edges:
        raise NoInternalEdgeError("tree has no internal edge to rearrange")
    pick = int(rng.integers(len(edges) * 2))
    clone = tree.copy()
    parent, child = _internal_edges(clone)[pick // 2]
    sibling_idx = next(i for i, c in enumerate(parent.children) if c is not child)
    sibling = parent.children[sibling_idx]
    grandchild = child.children[pick % 2]
    parent.children[sibling_idx] = grandchild
    child.children[pick % 2] = sibling
    return clone, 0.0


def propose_scale_branch(
    tree: Tree, rng: np.random.Generator, scale: float = 1.0
) -> tuple[Tree, float]:
    """Multiply one random branch by c = exp(scale * (u - 1/2)); Hastings log c."""
    clone = tree.copy()
    branches = [n for n in clone.postorder() if n is not clone.root]
    target = branches[int(rng.integers(len(branches)))]
    factor = math.exp(scale * (float(rng.random()) - 0.5))
    target.length = target.length * factor
    return clone, math.log(factor)


def reflect_unit_interval(x: float) -> float:
    """Fold a real into (0, 1) by reflecting at both ends."""
    x = x % 2.0
    if x >= 1.0:
        x = 2.0 - x
    return min(max(x, 1e-12), 1.0 - 1e-12)


def propose_params(
    params: SubstParams,
    rng: np.random.Generator,
    pi1_step: float = 0.1,
    mu_step: float = 0.3,
) -> tuple[SubstParams, float]:
    """Reflected walk on pi1 and a symmetric walk on log mu."""
    pi1 = reflect_unit_interval(
        params.pi1 + pi1_step * (2.0 * float(rng.random()) - 1.0)
    )
    mu = math.exp(math.log(params.mu) + mu_step * (2.0 * float(rng.random()) - 1.0))
    return SubstParams(pi1=pi1, mu=mu), 0.0


def mh_step(
    state: McmcState,
    data: CharacterMatrix,
    config: ChainConfig,
    rng: np.random.Generator,
) -> tuple[McmcState, bool]:
    """One tempered Metropolis-Hastings update.

    Move kinds are drawn from config.move_weights (topology, branch,
    parameters); the proposal is accepted with probability
    min(1, exp(dlogpost / T + log_hastings)).
    """
    weights = config.move_weights
    total = sum(weights)
    draw = float(rng.random()) * total
    tree, params = state.tree, state.params
    if draw < weights[0]:
        tree, log_hastings = propose_nni(state.tree, rng)
    elif draw < weights[0] + weights[1]:
        tree, log_hastings = propose_scale_branch(state.tree, rng, config.branch_scale)
    else:
        params, log_hastings = propose_params(
            state.params, rng, config.pi1_step, config.mu_step
        )
    proposed = log_posterior(tree, params, data, config)
    if math.isnan(proposed):
        raise NumericError("proposal log posterior is NaN")
    log_ratio = (proposed - state.log_posterior) / state.temperature + log_hastings
    accept = log_ratio >= 0 or float(rng.random()) < math.exp(log_ratio)
    if accept:
        return (
            replace(state, tree=tree, params=params, log_posterior=proposed),
            True,
        )
    return state, False


def _initial_state(
    data: CharacterMatrix, config: ChainConfig, rng: np.random.Generator
) -> McmcState:
    tree = random_topology(list(data.languages), rng)
    for node in tree.postorder():
        if node is not tree.root:
            node.length = 0.1
    pi1 = float(np.clip(data.data.mean(), 0.05, 0.95))
    params = SubstParams(pi1=pi1, mu=1.0)
    post = log_posterior(tree, params, data, config)
    if math.isnan(post):
        raise NumericError("initial log posterior is NaN")
    return McmcState(tree=tree, params=params, log_posterior=post, temperature=config.t0)


@dataclass
class ChainResult:
    trace: Trace
    map_tree: Tree
    consensus_tree: Tree
    map_params: SubstParams
    best_log_posterior: float
    n_iter: int
    wall_time: float

    def __iter__(self):
        # Unpacks as (trace, map_tree, consensus_tree).
        return iter((self.trace, self.map_tree, self.consensus_tree))


def run_chain(data: CharacterMatrix, config: ChainConfig) -> ChainResult:
    """Run one annealed chain to convergence or the iteration cap.

    Starts from a random topology with all branches at 0.1 and pi1 set
    to the matrix mean. The temperature decays by the cooling factor
    each iteration until it reaches 1; sampling then continues until
    the best log posterior has not improved for stop_window iterations.
    Returns the trace, the best-posterior tree, and the majority-rule
    consensus of the thinned post-annealing samples.
    """
    if data.n_languages < 3:
        raise TooFewLanguagesError("need at least three languages to infer a tree")
    started = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    state = _initial_state(data, config, rng)

    best_state = state
    stagnant = 0
    trace = Trace()
    samples: list[Tree] = []
    iteration = 0
    while iteration < config.max_iters:
        iteration += 1
        state, accepted = mh_step(state, data, config, rng)
        cooled = state.temperature == 1.0
        if accepted and state.log_posterior > best_state.log_posterior:
            best_state = state
            stagnant = 0
        elif cooled:
            stagnant += 1
        record_newick = None
        if cooled and iteration % config.sample_every == 0:
            samples.append(state.tree)
            record_newick = emit_newick(state.tree)
        trace.append(
            TraceRecord(
                iteration=iteration,
                log_posterior=state.log_posterior,
                temperature=state.temperature,
                pi1=state.params.pi1,
                mu=state.params.mu,
                accepted=accepted,
                newick=record_newick,
            )
        )
        if config.debug and iteration % 1000 == 0:
            recomputed = log_posterior(state.tree, state.params, data, config)
            if abs(recomputed - state.log_posterior) > 1e-9:
                raise AssertionError(
                    f"cached log posterior drifted: {state.log_posterior} "
                    f"vs {recomputed}"
                )
        if cooled and stagnant >= config.stop_window:
            break
        state = replace(
            state, temperature=max(1.0, config.cooling * state.temperature)
        )
    if not samples:
        samples = [best_state.tree]
    consensus = majority_rule_consensus(samples)
    return ChainResult(
        trace=trace,
        map_tree=best_state.tree,
        consensus_tree=consensus,
        map_params=best_state.params,
        best_log_posterior=best_state.log_posterior,
        n_iter=iteration,
        wall_time=time.perf_counter() - started,
    )


def _run_chain_task(task: tuple[CharacterMatrix, ChainConfig]) -> ChainResult:
    return run_chain(*task)


def run_chains(
    data: CharacterMatrix, configs: list[ChainConfig], jobs: int = 1
) -> tuple[ChainResult, list[ChainResult]]:
    """Run several independent chains; the best posterior wins ties by order."""
    tasks = [(data, cfg) for cfg in configs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_chain_task, tasks))
    else:
        results = [_run_chain_task(t) for t in tasks]
    best = max(range(len(results)), key=lambda i: (results[i].best_log_posterior, -i))
    return results[best], results
