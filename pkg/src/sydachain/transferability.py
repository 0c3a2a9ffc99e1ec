"""Manipulability-based transferability between agents and chain planning over a fleet."""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sydachain import ValidationError
from sydachain.kinematics import AgentModel, WorkspaceGrid, default_bounds, sample_workspace

EPSILON = 1e-6
FLEET_SCHEMA_VERSION = 1
KINDS = ("human", "robot")


def length_ratio(length_a: float, length_b: float) -> float:
    if not (length_a > 0 and length_b > 0):
        raise ValidationError(f"lengths must be positive, got {length_a}, {length_b}")
    return length_b / max(length_a, length_b)


def _check_grids(grid_a: WorkspaceGrid, grid_b: WorkspaceGrid) -> None:
    if grid_a.cell_size != grid_b.cell_size or grid_a.bounds != grid_b.bounds:
        raise ValidationError(
            f"workspace grids differ: cell_size {grid_a.cell_size} vs {grid_b.cell_size}, "
            f"bounds {grid_a.bounds} vs {grid_b.bounds}"
        )
    if not grid_a.cells:
        raise ValidationError("operator workspace grid is empty")


def _lack_cells(grid_a: WorkspaceGrid, grid_b: WorkspaceGrid):
    """(M_A, M_B) over A's cells where B falls short; unreached cells count as M_B = 0."""
    return [(m_a, grid_b.cells.get(c, 0.0)) for c, m_a in grid_a.cells.items() if grid_b.cells.get(c, 0.0) - m_a < 0]


def sufficient_ratio(grid_a: WorkspaceGrid, grid_b: WorkspaceGrid) -> float:
    """Fraction of A's occupied cells where M_B - M_A >= 0."""
    _check_grids(grid_a, grid_b)
    lacking = len(_lack_cells(grid_a, grid_b))
    return (len(grid_a.cells) - lacking) / len(grid_a.cells)


def divergence_sum(grid_a: WorkspaceGrid, grid_b: WorkspaceGrid, epsilon: float = EPSILON) -> float:
    """Raw sum of M_A log(M_A / M_B) over the lack-of-manipulability cells, M_B floored at epsilon."""
    _check_grids(grid_a, grid_b)
    return float(sum(m_a * math.log(m_a / max(m_b, epsilon)) for m_a, m_b in _lack_cells(grid_a, grid_b)))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def dissimilarity(grid_a: WorkspaceGrid, grid_b: WorkspaceGrid, epsilon: float = EPSILON) -> float:
    """Sigmoid of the divergence sum; 0 when B is sufficient everywhere in A's workspace."""
    _check_grids(grid_a, grid_b)
    if not _lack_cells(grid_a, grid_b):
        return 0.0
    return _sigmoid(divergence_sum(grid_a, grid_b, epsilon))


def transferability(alpha: float, length_ratio: float, sufficient: float, dissim: float) -> float:
    for name, value in (("alpha", alpha), ("length_ratio", length_ratio)):
        if not 0 < value <= 1:
            raise ValidationError(f"{name} must lie in (0, 1], got {value}")
    if not 0 <= sufficient <= 1:
        raise ValidationError(f"sufficient ratio must lie in [0, 1], got {sufficient}")
    if not 0 <= dissim <= 1:
        raise ValidationError(f"dissimilarity must lie in [0, 1], got {dissim}")
    return alpha * length_ratio * (1.0 * sufficient + (1.0 - dissim) * (1.0 - sufficient))


def alpha_for_pair(sigma_a: float, sigma_b: float, sigma_best: float) -> float:
    """Best sensor noise in the system over the noisier agent of the pair, in (0, 1]."""
    worst = max(sigma_a, sigma_b)
    if worst <= 0:
        return 1.0
    return min(1.0, max(sigma_best / worst, np.finfo(float).tiny))


def chain_transferability(hop_values) -> float:
    out = 1.0
    for t in hop_values:
        if not 0 <= t <= 1:
            raise ValidationError(f"hop transferability must lie in [0, 1], got {t}")
        out *= t
    return out


def min_models(n_h: int, n_r: int) -> tuple[int, int]:
    """(models for every human-robot pair, models for a minimally connected fleet)."""
    if n_h < 1 or n_r < 1:
        raise ValidationError("agent counts must be >= 1")
    return n_h * n_r, n_h + n_r - 1


@dataclass(frozen=True)
class TransferabilityReport:
    from_agent: str
    to_agent: str
    length_ratio: float
    sufficient_ratio: float
    dissimilarity: float
    alpha: float
    transferability: float
    divergence_sum: float = 0.0
    operator_cells: int = 0
    lack_cells: int = 0
    error_m: float | None = None

    CSV_COLUMNS = ("from", "to", "L", "one_minus_S", "one_minus_D", "alpha", "T", "E_m")

    def csv_row(self) -> str:
        e = "" if self.error_m is None else repr(self.error_m)
        vals = (self.length_ratio, 1.0 - self.sufficient_ratio, 1.0 - self.dissimilarity,
                self.alpha, self.transferability)
        return ",".join([self.from_agent, self.to_agent, *map(repr, vals), e])


def report_from_grids(
    agent_a: AgentModel,
    agent_b: AgentModel,
    grid_a: WorkspaceGrid,
    grid_b: WorkspaceGrid,
    alpha: float = 1.0,
    epsilon: float = EPSILON,
) -> TransferabilityReport:
    L = length_ratio(agent_a.length_for_ratio, agent_b.length_for_ratio)
    S = sufficient_ratio(grid_a, grid_b)
    D = dissimilarity(grid_a, grid_b, epsilon)
    return TransferabilityReport(
        agent_a.name, agent_b.name, L, S, D, alpha, transferability(alpha, L, S, D),
        divergence_sum(grid_a, grid_b, epsilon), len(grid_a.cells), len(_lack_cells(grid_a, grid_b)),
    )


def pair_grids(agent_a, agent_b, chain_a: str, chain_b: str, n_samples: int = 50_000,
               cell_size: float | None = None, seed: int = 0):
    """Sample both workspaces on one shared lattice (common cell size and bounds)."""
    if cell_size is None:
        cell_size = max(agent_a.total_length, agent_b.total_length) / 20.0
    bounds = default_bounds(max(agent_a.chain_reach(chain_a), agent_b.chain_reach(chain_b)))
    grid_a = sample_workspace(agent_a, chain_a, n_samples, cell_size, seed, bounds)
    grid_b = sample_workspace(agent_b, chain_b, n_samples, cell_size, seed, bounds)
    return grid_a, grid_b


def pair_reports(agent_a, agent_b, chain_a: str = "right_arm", chain_b: str = "right_arm",
                 n_samples: int = 50_000, cell_size: float | None = None, seed: int = 0,
                 alpha: float | None = None, sigma_best: float | None = None, epsilon: float = EPSILON):
    """Reports for A->B and B->A. Alpha defaults to the noise rule with the pair's lowest positive sigma."""
    grid_a, grid_b = pair_grids(agent_a, agent_b, chain_a, chain_b, n_samples, cell_size, seed)
    if alpha is None:
        if sigma_best is None:
            positive = [s for s in (agent_a.sensor_noise_sigma, agent_b.sensor_noise_sigma) if s > 0]
            sigma_best = min(positive, default=0.0)
        best = sigma_best
        alpha = alpha_for_pair(agent_a.sensor_noise_sigma, agent_b.sensor_noise_sigma, best)
    return (report_from_grids(agent_a, agent_b, grid_a, grid_b, alpha, epsilon),
            report_from_grids(agent_b, agent_a, grid_b, grid_a, alpha, epsilon))


# -- fleet graph and chain planning -----------------------------------------
@dataclass(frozen=True)
class FleetAgent:
    id: str
    kind: str
    spec: str = ""
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"agent {self.id!r}: kind must be one of {KINDS}")


@dataclass(frozen=True)
class FleetEdge:
    a: str
    b: str
    t_ab: float
    t_ba: float
    model: str = ""
    error_ab: float | None = None
    error_ba: float | None = None


@dataclass
class FleetGraph:
    agents: list[FleetAgent]
    edges: list[FleetEdge] = field(default_factory=list)

    def __post_init__(self):
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate agent ids in fleet")
        for e in self.edges:
            for end in (e.a, e.b):
                if end not in ids:
                    raise ValidationError(f"edge {e.a}-{e.b} references unknown agent {end!r}")
            for t in (e.t_ab, e.t_ba):
                if not 0 <= t <= 1:
                    raise ValidationError(f"edge {e.a}-{e.b}: transferability {t} outside [0, 1]")

    @property
    def ids(self) -> list[str]:
        return [a.id for a in self.agents]

    def agent(self, agent_id: str) -> FleetAgent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise ValidationError(f"unknown agent {agent_id!r}")

    def counts(self) -> tuple[int, int]:
        return sum(a.kind == "human" for a in self.agents), sum(a.kind == "robot" for a in self.agents)

    def adjacency(self) -> dict[str, list[tuple[str, float]]]:
        """Directed weighted adjacency, each neighbour list sorted by id."""
        adj: dict[str, list[tuple[str, float]]] = {i: [] for i in self.ids}
        for e in self.edges:
            adj[e.a].append((e.b, e.t_ab))
            adj[e.b].append((e.a, e.t_ba))
        return {k: sorted(v) for k, v in adj.items()}

    def components(self) -> list[list[str]]:
        adj = self.adjacency()
        seen: set[str] = set()
        comps = []
        for start in sorted(self.ids):
            if start in seen:
                continue
            stack, comp = [start], []
            seen.add(start)
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in adj[u]:
                    if v not in seen:
                        seen.add(v)
                        stack.append(v)
            comps.append(sorted(comp))
        return comps

    def is_spanning_tree(self) -> bool:
        return len(self.components()) == 1 and len(self.edges) == len(self.agents) - 1

    def with_edge(self, agent: FleetAgent, edge: FleetEdge) -> "FleetGraph":
        agents = self.agents if agent.id in self.ids else [*self.agents, agent]
        return FleetGraph(list(agents), [*self.edges, edge])

    # persistence
    def to_dict(self) -> dict:
        return {
            "schema_version": FLEET_SCHEMA_VERSION,
            "agents": [{"id": a.id, "kind": a.kind, "spec": a.spec, "sigma": a.sigma} for a in self.agents],
            "edges": [
                {"a": e.a, "b": e.b, "T_ab": e.t_ab, "T_ba": e.t_ba, "model": e.model,
                 "E_ab": e.error_ab, "E_ba": e.error_ba}
                for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FleetGraph":
        if d.get("schema_version") != FLEET_SCHEMA_VERSION:
            raise ValidationError(f"unsupported fleet schema_version {d.get('schema_version')!r}")
        try:
            agents = [FleetAgent(a["id"], a["kind"], a.get("spec", ""), float(a.get("sigma", 0.0))) for a in d["agents"]]
            edges = [
                FleetEdge(e["a"], e["b"], float(e["T_ab"]), float(e["T_ba"]), e.get("model", ""),
                          e.get("E_ab"), e.get("E_ba"))
                for e in d.get("edges", [])
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed fleet file: {exc}") from exc
        return cls(agents, edges)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "FleetGraph":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"fleet file not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def best_paths(fleet: FleetGraph, source: str) -> dict[str, tuple[float, tuple[str, ...]]]:
    """Max-product paths from ``source``: Dijkstra on -log(T), ties broken by path order."""
    adj = fleet.adjacency()
    if source not in adj:
        raise ValidationError(f"unknown agent {source!r}")
    best: dict[str, tuple[float, tuple[str, ...]]] = {}
    heap = [(0.0, (source,))]
    while heap:
        cost, path = heapq.heappop(heap)
        u = path[-1]
        if u in best:
            continue
        best[u] = (math.exp(-cost), path)
        for v, t in adj[u]:
            if t > 0 and v not in best and v not in path:
                heapq.heappush(heap, (cost - math.log(t), path + (v,)))
    return best


def path_product(fleet: FleetGraph, path) -> float:
    weights = {(e.a, e.b): e.t_ab for e in fleet.edges}
    weights.update({(e.b, e.a): e.t_ba for e in fleet.edges})
    return chain_transferability(weights[(u, v)] for u, v in zip(path, path[1:]))


@dataclass(frozen=True)
class Candidate:
    anchor: str
    t_to_new: float  # T(anchor -> new agent)
    t_from_new: float  # T(new agent -> anchor)
    model: str = ""


@dataclass(frozen=True)
class AuditRow:
    anchor: str
    counterpart: str
    product: float
    path: tuple[str, ...]

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    @property
    def long_path(self) -> bool:
        return self.hops > 2


@dataclass
class ChainPlan:
    new_agent: str
    objective: str
    chosen: Candidate
    best_paths: dict[str, tuple[float, tuple[str, ...]]]
    scores: dict[str, float]
    audit: list[AuditRow]
    model_counts: tuple[int, int]

    @property
    def best_score(self) -> float:
        return self.scores[self.chosen.anchor]


def plan_chain(
    fleet: FleetGraph,
    new_agent: FleetAgent,
    candidates: list[Candidate],
    objective: str = "max_min",
    query: str | None = None,
    toward_new: bool = True,
) -> ChainPlan:
    """Choose where to attach ``new_agent`` so chained mappings keep the highest transferability.

    Each candidate adds one edge. For every counterpart agent (existing agents of
    the other kind, or all existing agents if none) the best product path to the
    new agent is found. ``max_min`` maximizes the worst counterpart's product;
    ``per_query`` maximizes the product for ``query`` alone.
    """
    if not candidates:
        raise ValidationError("no candidate attachments given")
    if objective not in ("max_min", "per_query"):
        raise ValidationError(f"unknown objective {objective!r}")
    if objective == "per_query" and query is None:
        raise ValidationError("per_query objective needs a query agent")
    comps = fleet.components()
    if len(comps) > 1:
        raise ValidationError("fleet is disconnected; components: " + "; ".join("{" + ", ".join(c) + "}" for c in comps))
    if new_agent.id in fleet.ids:
        raise ValidationError(f"agent {new_agent.id!r} already belongs to the fleet")
    counterparts = sorted(a.id for a in fleet.agents if a.kind != new_agent.kind) or sorted(fleet.ids)
    if query is not None and query not in fleet.ids:
        raise ValidationError(f"unknown query agent {query!r}")

    scores: dict[str, float] = {}
    paths_by_anchor = {}
    audit: list[AuditRow] = []
    for cand in sorted(candidates, key=lambda c: c.anchor):
        if cand.anchor not in fleet.ids:
            raise ValidationError(f"candidate anchor {cand.anchor!r} is not in the fleet")
        if cand.anchor in scores:
            raise ValidationError(f"duplicate candidate anchor {cand.anchor!r}")
        g = fleet.with_edge(new_agent, FleetEdge(cand.anchor, new_agent.id, cand.t_to_new, cand.t_from_new))
        found = {}
        if toward_new:
            for c in counterparts:
                found[c] = best_paths(g, c).get(new_agent.id, (0.0, ()))
        else:
            reach = best_paths(g, new_agent.id)
            found = {c: reach.get(c, (0.0, ())) for c in counterparts}
        for c in counterparts:
            audit.append(AuditRow(cand.anchor, c, found[c][0], found[c][1]))
        paths_by_anchor[cand.anchor] = found
        if objective == "max_min":
            scores[cand.anchor] = min(p for p, _ in found.values())
        else:
            scores[cand.anchor] = found[query][0] if query in found else best_paths(g, query)[new_agent.id][0]
    # ties go to the alphabetically first anchor
    chosen_anchor = max(sorted(scores), key=lambda a: scores[a])
    chosen = next(c for c in candidates if c.anchor == chosen_anchor)
    n_h, n_r = fleet.counts()
    n_h += new_agent.kind == "human"
    n_r += new_agent.kind == "robot"
    counts = min_models(max(n_h, 1), max(n_r, 1))
    return ChainPlan(new_agent.id, objective, chosen, paths_by_anchor[chosen_anchor], scores, audit, counts)
