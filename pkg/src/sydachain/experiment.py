"""Three-agent chain experiment: paired datasets, k-fold pair errors, both chain orders.

Agents: ``small`` and ``large`` humanoids and a ``robot``. Datasets follow the
mimicry roles of the original setting: both humanoids mimic the robot, and the
small humanoid mimics the large one. Each chain ends at the robot:

* order ``large-small-robot`` uses the large/small and small/robot models and is
  scored on held-out large/robot pairs;
* order ``small-large-robot`` uses the large/small and large/robot models and is
  scored on held-out small/robot pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sydachain.datagen import (
    CorrespondenceMap,
    MimicConfig,
    MotionDataset,
    add_sensor_noise,
    generate_paired_dataset,
)
from sydachain.fixtures import three_agents
from sydachain.kinematics import AgentModel
from sydachain.neuralnet import TrainConfig
from sydachain.syda import (
    Architecture,
    MappingStage,
    chain_map,
    cv_folds,
    keypoint_distances,
    train_direct,
    train_syda,
)
from sydachain.transferability import alpha_for_pair, chain_transferability, pair_reports

# (leader, follower) roles per pair
PAIR_ROLES = (("robot", "small"), ("robot", "large"), ("large", "small"))
CHAIN_ORDERS = (("large", "small", "robot"), ("small", "large", "robot"))


@dataclass
class ExperimentConfig:
    n_per_pair: int = 700
    folds: int = 3
    arch: Architecture = field(default_factory=lambda: Architecture(latent_width=5, hidden_widths=(32, 16)))
    train: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=3e-3, epochs=300, batch_size=64))
    workspace_samples: int = 50_000
    workspace_seed: int = 0
    chain: str = "right_arm"
    # the robot and humanoids differ in link ratios, so a few centimetres of residual is structural
    mimic: MimicConfig = field(default_factory=lambda: MimicConfig(restart_threshold=0.06))


def fixture_agents() -> dict[str, AgentModel]:
    small, large, robot = three_agents()
    return {"small": small, "large": large, "robot": robot}


def sigma_best(agents) -> float:
    """Lowest positive capture noise in the system (a noiseless sensor sets no scale)."""
    positive = [a.sensor_noise_sigma for a in agents if a.sensor_noise_sigma > 0]
    return min(positive) if positive else 0.0


def pair_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def make_datasets(agents: dict[str, AgentModel], seed: int, n: int,
                  mimic: MimicConfig = MimicConfig()) -> dict[tuple[str, str], MotionDataset]:
    out = {}
    for i, (lead, follow) in enumerate(PAIR_ROLES):
        la, fo = agents[lead], agents[follow]
        s = pair_seed(seed, i)
        clean = generate_paired_dataset(la, fo, CorrespondenceMap.by_name(la, fo), n, s, config=mimic)
        out[lead, follow] = add_sensor_noise(clean, la.sensor_noise_sigma, fo.sensor_noise_sigma, s + 1)
    return out


def transferability_table(agents: dict[str, AgentModel], config: ExperimentConfig):
    """Directed reports keyed by (from, to) role names."""
    best = sigma_best(agents.values())
    table = {}
    roles = list(agents)
    for i, x in enumerate(roles):
        for y in roles[i + 1:]:
            ax, ay = agents[x], agents[y]
            alpha = alpha_for_pair(ax.sensor_noise_sigma, ay.sensor_noise_sigma, best)
            fwd, bwd = pair_reports(ax, ay, config.chain, config.chain, config.workspace_samples,
                                    seed=config.workspace_seed, alpha=alpha)
            table[x, y], table[y, x] = fwd, bwd
    return table


def chain_scores(table) -> dict[tuple[str, ...], float]:
    return {order: chain_transferability(table[u, v].transferability for u, v in zip(order, order[1:]))
            for order in CHAIN_ORDERS}


class _Directory:
    """Trained models of one fold, addressed by directed (from, to) role pairs."""

    def __init__(self, method: str):
        self.method = method
        self.stages: dict[tuple[str, str], MappingStage] = {}

    def add(self, lead: str, follow: str, ds: MotionDataset, arch, cfg):
        if self.method == "syda":
            model, _ = train_syda(ds, arch, cfg)
            self.stages[lead, follow] = MappingStage(model)
            self.stages[follow, lead] = MappingStage(model, reverse=True)
        else:
            fwd, _ = train_direct(ds, arch, cfg)
            bwd, _ = train_direct(ds.swapped(), arch, cfg)
            self.stages[lead, follow] = MappingStage(fwd)
            self.stages[follow, lead] = MappingStage(bwd)


@dataclass
class SeedResult:
    seed: int
    method: str
    pair_distances: dict  # (from, to) -> (n, K) held-out distances
    chain_distances: dict  # order -> (n, K) held-out distances at the chain end
    stage_distances: dict  # order -> [(n, K) per stage], each on its own pair's held-out data
    roundtrip: dict  # (from, to) -> (n, K) distances of from->to->from
    keypoints: list

    def pair_error(self, u, v) -> float:
        return float(np.mean(self.pair_distances[u, v]))

    def chain_error(self, order) -> float:
        return float(np.mean(self.chain_distances[order]))

    def chain_std(self, order) -> float:
        return float(np.std(self.chain_distances[order]))

    def stage_errors(self, order) -> list[float]:
        return [float(np.mean(d)) for d in self.stage_distances[order]]

    def roundtrip_error(self, u, v) -> float:
        return float(np.mean(self.roundtrip[u, v]))


def run_seed(seed: int, method: str, config: ExperimentConfig = ExperimentConfig(),
             agents: dict[str, AgentModel] | None = None, datasets=None) -> SeedResult:
    agents = agents or fixture_agents()
    datasets = datasets or make_datasets(agents, seed, config.n_per_pair, config.mimic)
    cfg = TrainConfig(**{**config.train.__dict__, "seed": seed})
    folds = {pair: cv_folds(len(ds), config.folds, pair_seed(seed, 100 + i))
             for i, (pair, ds) in enumerate(datasets.items())}
    pair_d: dict = {}
    chain_d: dict = {o: [] for o in CHAIN_ORDERS}
    stage_d: dict = {o: [[], []] for o in CHAIN_ORDERS}
    round_d: dict = {}
    keypoints = None
    for f in range(config.folds):
        directory = _Directory(method)
        held = {}
        for pair, ds in datasets.items():
            test_idx = folds[pair][f]
            train_idx = np.setdiff1d(np.arange(len(ds)), test_idx)
            directory.add(*pair, ds.subset(train_idx), config.arch, cfg)
            held[pair] = ds.subset(test_idx)
        # pair errors in both directions, plus round trips for SyDa
        for (lead, follow), ds in held.items():
            for u, v, x, truth in ((lead, follow, ds.features_a, ds.features_b),
                                   (follow, lead, ds.features_b, ds.features_a)):
                pred = directory.stages[u, v](x)
                keypoints, d = keypoint_distances(agents[v], pred, truth)
                pair_d.setdefault((u, v), []).append(d)
                if method == "syda":
                    back = directory.stages[v, u](pred)
                    round_d.setdefault((u, v), []).append(keypoint_distances(agents[u], back, x)[1])
        for order in CHAIN_ORDERS:
            first, mid, last = order
            test = _pair_view(held, first, last)
            stages = [directory.stages[first, mid], directory.stages[mid, last]]
            out, _ = chain_map(stages, test[0])
            chain_d[order].append(keypoint_distances(agents[last], out, test[1])[1])
            for i, (u, v) in enumerate(((first, mid), (mid, last))):
                x, truth = _pair_view(held, u, v)
                stage_d[order][i].append(keypoint_distances(agents[v], directory.stages[u, v](x), truth)[1])
    stack = lambda parts: np.vstack(parts)  # noqa: E731
    return SeedResult(
        seed, method,
        {k: stack(v) for k, v in pair_d.items()},
        {k: stack(v) for k, v in chain_d.items()},
        {k: [stack(s) for s in v] for k, v in stage_d.items()},
        {k: stack(v) for k, v in round_d.items()},
        list(keypoints),
    )


def _pair_view(held: dict, u: str, v: str):
    """(inputs of u, true features of v) from whichever held-out dataset pairs them."""
    if (u, v) in held:
        ds = held[u, v]
        return ds.features_a, ds.features_b
    ds = held[v, u]
    return ds.features_b, ds.features_a


@dataclass
class PairResult:
    seed: int
    method: str
    forward: np.ndarray  # (n, K) held-out distances, leader -> follower
    backward: np.ndarray  # follower -> leader

    @property
    def forward_error(self) -> float:
        return float(np.mean(self.forward))

    @property
    def backward_error(self) -> float:
        return float(np.mean(self.backward))


def run_pair(seed: int, method: str, leader: AgentModel, follower: AgentModel,
             config: ExperimentConfig = ExperimentConfig()) -> PairResult:
    """k-fold errors of one pair in both directions (one SyDa model serves both)."""
    s = pair_seed(seed, 0)
    clean = generate_paired_dataset(leader, follower, CorrespondenceMap.by_name(leader, follower),
                                    config.n_per_pair, s, config=config.mimic)
    ds = add_sensor_noise(clean, leader.sensor_noise_sigma, follower.sensor_noise_sigma, s + 1)
    cfg = TrainConfig(**{**config.train.__dict__, "seed": seed})
    fwd, bwd = [], []
    for test_idx in cv_folds(len(ds), config.folds, pair_seed(seed, 100)):
        directory = _Directory(method)
        directory.add("a", "b", ds.subset(np.setdiff1d(np.arange(len(ds)), test_idx)), config.arch, cfg)
        held = ds.subset(test_idx)
        fwd.append(keypoint_distances(follower, directory.stages["a", "b"](held.features_a), held.features_b)[1])
        bwd.append(keypoint_distances(leader, directory.stages["b", "a"](held.features_b), held.features_a)[1])
    return PairResult(seed, method, np.vstack(fwd), np.vstack(bwd))
