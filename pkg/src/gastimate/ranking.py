"""Tournament ranking of prediction models from pairwise statistical verdicts.

A model wins a pairwise comparison when its error distribution is
significantly smaller with a non-negligible effect size; everything else is a
draw. Wins add a full-weight edge from loser to winner, draws half-weight
edges both ways. Scores solve the alpha-centrality system x = alpha*A'x + e
exactly, and ranks follow descending score with standard competition ties.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DuplicatePair, NearSingular, UnstableRanking
from .stats import CLIFF_NEGLIGIBLE

WIN_WEIGHT = 1.0
DRAW_WEIGHT = 0.5
SCORE_TIE_TOL = 1e-9
STABILITY_FRACTIONS = (0.3, 0.6, 0.9)


@dataclass(frozen=True, slots=True)
class WinDrawGraph:
    """Directed weighted graph over model identifiers."""

    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], float]  # (from, to) -> weight

    def adjacency(self) -> np.ndarray:
        index = {m: i for i, m in enumerate(self.nodes)}
        a = np.zeros((len(self.nodes), len(self.nodes)))
        for (src, dst), w in self.edges.items():
            a[index[src], index[dst]] = w
        return a


@dataclass(frozen=True, slots=True)
class RankedModel:
    model: str
    score: float
    rank: int


@dataclass(frozen=True, slots=True)
class RankTable:
    models: tuple[RankedModel, ...]
    alpha: float
    spectral_radius: float

    def rank_of(self, model: str) -> int:
        for entry in self.models:
            if entry.model == model:
                return entry.rank
        raise KeyError(model)

    def to_json(self) -> str:
        return json.dumps(
            {
                "models": [
                    {"id": m.model, "score": m.score, "rank": m.rank} for m in self.models
                ],
                "alpha": self.alpha,
                "spectral_radius": self.spectral_radius,
            },
            indent=2,
        )


def build_graph(
    pairwise: Sequence[tuple[str, str, float, float]],
    alpha: float = 0.05,
    negligible: float = CLIFF_NEGLIGIBLE,
) -> WinDrawGraph:
    """Turn pairwise (model_i, model_j, p_value, delta) verdicts into a graph.

    ``delta`` is Cliff's delta of model_i's errors against model_j's: i wins
    when p < alpha and delta < -negligible (i's errors smaller), j wins on the
    mirrored condition, anything else is a draw.
    """
    nodes: list[str] = []
    seen_pairs = set()
    edges: dict[tuple[str, str], float] = {}
    for m_i, m_j, p, delta in pairwise:
        key = frozenset((m_i, m_j))
        if m_i == m_j:
            raise DuplicatePair(f"self-pair {m_i!r}")
        if key in seen_pairs:
            raise DuplicatePair(f"pair ({m_i}, {m_j}) listed twice")
        seen_pairs.add(key)
        for m in (m_i, m_j):
            if m not in nodes:
                nodes.append(m)
        if p < alpha and delta < -negligible:
            edges[(m_j, m_i)] = WIN_WEIGHT
        elif p < alpha and delta > negligible:
            edges[(m_i, m_j)] = WIN_WEIGHT
        else:
            edges[(m_i, m_j)] = DRAW_WEIGHT
            edges[(m_j, m_i)] = DRAW_WEIGHT
    return WinDrawGraph(nodes=tuple(nodes), edges=edges)


def spectral_radius(graph: WinDrawGraph) -> float:
    """Largest absolute eigenvalue of the weighted adjacency matrix."""
    if not graph.nodes:
        return 0.0
    eigenvalues = np.linalg.eigvals(graph.adjacency())
    return float(np.max(np.abs(eigenvalues)))


def alpha_centrality(
    graph: WinDrawGraph, alpha: float, exogenous: float = 1.0
) -> dict[str, float]:
    """Solve x = alpha * A' x + e exactly via a dense linear system."""
    n = len(graph.nodes)
    if n == 0:
        return {}
    radius = spectral_radius(graph)
    if alpha * radius >= 1.0 - 1e-6:
        raise NearSingular(f"alpha*spectral_radius = {alpha * radius:.6f} too close to 1")
    a = graph.adjacency()
    system = np.eye(n) - alpha * a.T
    scores = np.linalg.solve(system, np.full(n, float(exogenous)))
    return {m: float(s) for m, s in zip(graph.nodes, scores)}


def _competition_ranks(scores: Mapping[str, float]) -> dict[str, int]:
    """Descending-score standard competition ranks; ties within SCORE_TIE_TOL."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    ranks: dict[str, int] = {}
    group_rank = 1
    group_leader = None
    for position, (model, score) in enumerate(ordered, start=1):
        if group_leader is None or group_leader - score > SCORE_TIE_TOL:
            group_rank = position
            group_leader = score
        ranks[model] = group_rank
    return ranks


def rank_models(graph: WinDrawGraph) -> RankTable:
    """Rank by alpha centrality with a spectrum-aware automatic alpha.

    alpha = 0.9 / spectral_radius keeps the system solvable even with draw
    cliques (whose radius reaches 1). The rank order is checked across
    alpha in {0.3, 0.6, 0.9}/radius; disagreement raises UnstableRanking.
    """
    radius = spectral_radius(graph)
    if radius > 0.0:
        candidate_alphas = [f / radius for f in STABILITY_FRACTIONS]
        alpha = candidate_alphas[-1]
    else:
        candidate_alphas = [1.0]
        alpha = 1.0
    rankings = []
    for a in candidate_alphas:
        scores = alpha_centrality(graph, a)
        rankings.append(_competition_ranks(scores))
    if any(r != rankings[-1] for r in rankings):
        raise UnstableRanking(
            f"rank order varies across alpha sweep {candidate_alphas}: {rankings}"
        )
    scores = alpha_centrality(graph, alpha)
    ranks = rankings[-1]
    models = tuple(
        RankedModel(model=m, score=scores[m], rank=ranks[m])
        for m in sorted(graph.nodes, key=lambda m: (ranks[m], m))
    )
    return RankTable(models=models, alpha=alpha, spectral_radius=radius)
