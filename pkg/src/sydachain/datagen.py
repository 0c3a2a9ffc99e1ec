"""Paired motion datasets produced by a follower agent mimicking a leader."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from sydachain import ValidationError
from sydachain.kinematics import AgentModel, forward_kinematics, keypoint_array, keypoints_with_jacobians

DATASET_MAGIC = "# sydachain-dataset v1"


@dataclass(frozen=True)
class CorrespondenceMap:
    pairs: tuple[tuple[str, str, float], ...]
    scale: float = 1.0

    def validate(self, leader: AgentModel, follower: AgentModel) -> None:
        if not any(w > 0 for _, _, w in self.pairs):
            raise ValidationError("correspondence map needs at least one pair with positive weight")
        for ka, kb, w in self.pairs:
            if w < 0:
                raise ValidationError(f"negative weight for pair {ka}->{kb}")
            if ka not in leader.keypoints:
                raise ValidationError(f"leader {leader.name!r} has no keypoint {ka!r}")
            if kb not in follower.keypoints:
                raise ValidationError(f"follower {follower.name!r} has no keypoint {kb!r}")
        if not self.scale > 0:
            raise ValidationError("correspondence scale must be positive")

    @classmethod
    def by_name(cls, leader: AgentModel, follower: AgentModel, scale: float | None = None) -> "CorrespondenceMap":
        """Unit-weight pairs over keypoints both agents declare; scale defaults to the length ratio."""
        shared = [k for k in leader.keypoints if k in follower.keypoints]
        if not shared:
            raise ValidationError(f"agents {leader.name!r} and {follower.name!r} share no keypoint names")
        if scale is None:
            scale = follower.total_length / leader.total_length
        return cls(tuple((k, k, 1.0) for k in shared), float(scale))

    def to_dict(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "scale": self.scale}

    @classmethod
    def from_dict(cls, data: dict) -> "CorrespondenceMap":
        return cls(tuple((a, b, float(w)) for a, b, w in data["pairs"]), float(data.get("scale", 1.0)))


@dataclass(frozen=True)
class MimicConfig:
    step_size: float = 1.0
    max_iters: int = 200
    tolerance: float = 1e-7
    damping: float = 1e-4
    restart_threshold: float = 0.01
    restarts: int = 4

    def to_dict(self) -> dict:
        return {"step_size": self.step_size, "max_iters": self.max_iters, "tolerance": self.tolerance,
                "damping": self.damping, "restart_threshold": self.restart_threshold, "restarts": self.restarts}


@dataclass(frozen=True)
class MimicResult:
    pose: np.ndarray
    residual: float  # weighted RMS keypoint distance, meters
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...] = ()


@dataclass
class MotionDataset:
    agent_a: str
    agent_b: str
    features_a: np.ndarray  # (n, width_a)
    features_b: np.ndarray  # (n, width_b)
    encoding_a: str
    encoding_b: str
    provenance: dict = field(default_factory=dict)
    residuals: np.ndarray | None = None  # per-frame mimic residuals, when generated here

    def __post_init__(self):
        self.features_a = np.atleast_2d(np.asarray(self.features_a, dtype=float))
        self.features_b = np.atleast_2d(np.asarray(self.features_b, dtype=float))
        if len(self.features_a) == 0:
            raise ValidationError("dataset has no samples")
        if len(self.features_a) != len(self.features_b):
            raise ValidationError("paired feature arrays differ in length")

    def __len__(self):
        return len(self.features_a)

    @property
    def samples(self):
        return list(zip(self.features_a, self.features_b))

    def subset(self, index) -> "MotionDataset":
        res = None if self.residuals is None else self.residuals[index]
        return replace(self, features_a=self.features_a[index], features_b=self.features_b[index], residuals=res)

    def swapped(self) -> "MotionDataset":
        return MotionDataset(self.agent_b, self.agent_a, self.features_b, self.features_a,
                             self.encoding_b, self.encoding_a, dict(self.provenance), self.residuals)

    def __eq__(self, other):
        if not isinstance(other, MotionDataset):
            return NotImplemented
        return (
            (self.agent_a, self.agent_b, self.encoding_a, self.encoding_b)
            == (other.agent_a, other.agent_b, other.encoding_a, other.encoding_b)
            and np.array_equal(self.features_a, other.features_a)
            and np.array_equal(self.features_b, other.features_b)
            and self.provenance == other.provenance
        )


def encode_features(agent: AgentModel, poses) -> np.ndarray:
    poses = np.atleast_2d(poses)
    if agent.feature_encoding == "joint_angles":
        return poses.copy()
    return keypoint_array(agent, poses).reshape(len(poses), -1)


def features_to_keypoints(agent: AgentModel, features) -> np.ndarray:
    """Inverse of the feature encoding, up to keypoint positions: (n, K, 3)."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[1] != agent.feature_width:
        raise ValidationError(f"agent {agent.name!r} features have width {agent.feature_width}, got {features.shape[1]}")
    if agent.feature_encoding == "joint_angles":
        return keypoint_array(agent, features)
    return features.reshape(len(features), -1, 3)


def sample_source_motion(agent: AgentModel, n: int, seed: int, smoothness: int | None = None) -> np.ndarray:
    """n poses linearly interpolated between ``smoothness`` random waypoints, shape (n, dof)."""
    if n <= 0:
        raise ValidationError("n must be positive")
    if smoothness is None:
        smoothness = max(2, n // 10)
    if smoothness < 1:
        raise ValidationError("smoothness (waypoint count) must be >= 1")
    rng = np.random.default_rng(seed)
    waypoints = rng.uniform(agent.lower, agent.upper, size=(smoothness, agent.dof))
    if smoothness == 1:
        return np.repeat(waypoints, n, axis=0)
    t = np.linspace(0.0, smoothness - 1, n)
    k = np.minimum(np.floor(t).astype(int), smoothness - 2)
    frac = (t - k)[:, None]
    poses = (1.0 - frac) * waypoints[k] + frac * waypoints[k + 1]
    return np.clip(poses, agent.lower, agent.upper)


def mimic(
    follower: AgentModel,
    leader_keypoints: dict[str, np.ndarray],
    cmap: CorrespondenceMap,
    init,
    config: MimicConfig = MimicConfig(),
) -> MimicResult:
    """Projected descent with backtracking on the weighted squared keypoint mismatch.

    Each step moves along the gradient scaled by a damped Gauss-Newton matrix,
    clips to joint limits and halves the step until the objective decreases.
    """
    q = np.clip(follower.validate_pose(init).astype(float), follower.lower, follower.upper)
    names = [kb for _, kb, _ in cmap.pairs]
    weights = np.array([w for _, _, w in cmap.pairs])
    targets = cmap.scale * np.array([np.asarray(leader_keypoints[ka], dtype=float) for ka, _, _ in cmap.pairs])
    lower, upper = follower.lower, follower.upper
    order = [follower.keypoint_names.index(n) for n in names]

    def objective(pose):
        pts = keypoint_array(follower, pose)[0][order]
        return float(np.sum(weights * np.sum((pts - targets) ** 2, axis=1)))

    def value_and_direction(pose):
        pts, jac = keypoints_with_jacobians(follower, pose, names)
        diff = pts - targets
        f = float(np.sum(weights * np.sum(diff**2, axis=1)))
        jw = jac * np.sqrt(weights)[:, None, None]
        jflat = jw.reshape(-1, follower.dof)
        half_grad = np.einsum("k,ka,kad->d", weights, diff, jac)
        # damped Gauss-Newton scaling of the gradient; positive definite, so still a descent direction
        hess = jflat.T @ jflat + config.damping * np.eye(follower.dof)
        return f, np.linalg.solve(hess, half_grad)

    wsum = float(weights.sum())
    f, d = value_and_direction(q)
    trace = [f]
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        step = config.step_size
        accepted = False
        for _ in range(40):
            cand = np.clip(q - step * d, lower, upper)
            if np.array_equal(cand, q):
                break
            f_new = objective(cand)
            if f_new < f:
                accepted = True
                break
            step *= 0.5
        while accepted:
            # overshoot guard for large-residual targets: keep halving while it helps
            half = np.clip(q - 0.5 * step * d, lower, upper)
            f_half = objective(half)
            if f_half >= f_new:
                break
            cand, f_new, step = half, f_half, 0.5 * step
        if not accepted:
            converged = True
            break
        old_res = math.sqrt(f / wsum)
        q = cand
        f, d = value_and_direction(q)
        trace.append(f)
        if abs(old_res - math.sqrt(f / wsum)) < config.tolerance:
            converged = True
            break
    return MimicResult(q, math.sqrt(f / wsum), it, converged, tuple(trace))


def generate_paired_dataset(
    leader: AgentModel,
    follower: AgentModel,
    cmap: CorrespondenceMap,
    n: int,
    seed: int,
    smoothness: int | None = None,
    config: MimicConfig = MimicConfig(),
) -> MotionDataset:
    cmap.validate(leader, follower)
    poses_a = sample_source_motion(leader, n, seed, smoothness)
    kp_a = forward_kinematics(leader, poses_a)
    q = 0.5 * (follower.lower + follower.upper)
    poses_b = np.empty((n, follower.dof))
    residuals = np.empty(n)
    iters = np.empty(n, dtype=int)
    restarts = 0
    for i in range(n):
        target = {k: v[i] for k, v in kp_a.items()}
        res = mimic(follower, target, cmap, q, config)
        if res.residual > config.restart_threshold:
            # warm start trapped (joint limit or wrong branch): try seeded cold starts
            rng = np.random.default_rng([seed, i])
            starts = [0.5 * (follower.lower + follower.upper)]
            starts += list(rng.uniform(follower.lower, follower.upper, size=(config.restarts, follower.dof)))
            for start in starts:
                alt = mimic(follower, target, cmap, start, config)
                if alt.residual < 0.9 * res.residual:
                    res = alt
            restarts += 1
        q = res.pose
        poses_b[i] = q
        residuals[i] = res.residual
        iters[i] = res.iterations
    if not np.all(np.isfinite(residuals)):
        raise ValidationError("mimicry produced non-finite residuals")
    provenance = {
        "seed": int(seed),
        "n": int(n),
        "smoothness": smoothness if smoothness is not None else max(2, n // 10),
        "correspondence": cmap.to_dict(),
        "mimic": config.to_dict(),
        "mean_residual_m": float(residuals.mean()),
        "max_residual_m": float(residuals.max()),
        "restarted_frames": restarts,
        "noise_sigma_a": 0.0,
        "noise_sigma_b": 0.0,
    }
    return MotionDataset(
        leader.name, follower.name,
        encode_features(leader, poses_a), encode_features(follower, poses_b),
        leader.feature_encoding, follower.feature_encoding, provenance, residuals,
    )


def add_sensor_noise(dataset: MotionDataset, sigma_a: float, sigma_b: float, seed: int) -> MotionDataset:
    """Independent zero-mean Gaussian noise on every feature component."""
    if sigma_a < 0 or sigma_b < 0:
        raise ValidationError("noise sigmas must be >= 0")
    rng = np.random.default_rng(seed)
    noise_a = rng.normal(0.0, 1.0, dataset.features_a.shape) * sigma_a
    noise_b = rng.normal(0.0, 1.0, dataset.features_b.shape) * sigma_b
    prov = dict(dataset.provenance)
    prov.update(noise_sigma_a=float(sigma_a), noise_sigma_b=float(sigma_b), noise_seed=int(seed))
    return replace(dataset, features_a=dataset.features_a + noise_a,
                   features_b=dataset.features_b + noise_b, provenance=prov)


def export_dataset(dataset: MotionDataset, path, header_lines=()) -> None:
    meta = {
        "agent_a": dataset.agent_a,
        "agent_b": dataset.agent_b,
        "encoding_a": dataset.encoding_a,
        "encoding_b": dataset.encoding_b,
        "width_a": dataset.features_a.shape[1],
        "width_b": dataset.features_b.shape[1],
        "n": len(dataset),
        "provenance": dataset.provenance,
    }
    lines = [DATASET_MAGIC, *(f"# {h}" for h in header_lines), "# meta: " + json.dumps(meta, sort_keys=True)]
    for a, b in zip(dataset.features_a, dataset.features_b):
        lines.append(",".join(map(repr, a.tolist())) + "|" + ",".join(map(repr, b.tolist())))
    Path(path).write_text("\n".join(lines) + "\n")


def import_dataset(path, agent_a: AgentModel | None = None, agent_b: AgentModel | None = None) -> MotionDataset:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"dataset not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != DATASET_MAGIC:
        raise ValidationError(f"{path}:1: not a sydachain dataset file")
    meta = None
    rows_a, rows_b = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("# meta: "):
            try:
                meta = json.loads(line[len("# meta: "):])
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: bad meta header ({exc})") from exc
            continue
        if line.startswith("#") or not line.strip():
            continue
        if meta is None:
            raise ValidationError(f"{path}:{lineno}: data row before meta header")
        try:
            left, right = line.split("|")
            a = [float(x) for x in left.split(",")]
            b = [float(x) for x in right.split(",")]
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: malformed row ({exc})") from exc
        if len(a) != meta["width_a"] or len(b) != meta["width_b"]:
            raise ValidationError(
                f"{path}:{lineno}: row has widths {len(a)}|{len(b)}, expected {meta['width_a']}|{meta['width_b']}"
            )
        rows_a.append(a)
        rows_b.append(b)
    if meta is None:
        raise ValidationError(f"{path}: missing meta header")
    if len(rows_a) != meta["n"]:
        raise ValidationError(f"{path}:{len(lines) + 1}: expected {meta['n']} rows, found {len(rows_a)} (truncated?)")
    for agent, key in ((agent_a, "a"), (agent_b, "b")):
        if agent is None:
            continue
        if agent.name != meta[f"agent_{key}"] or agent.feature_encoding != meta[f"encoding_{key}"] \
                or agent.feature_width != meta[f"width_{key}"]:
            raise ValidationError(
                f"{path}: side {key} declares agent {meta[f'agent_{key}']!r} ({meta[f'encoding_{key}']}, "
                f"width {meta[f'width_{key}']}), which does not match agent spec {agent.name!r}"
            )
    return MotionDataset(meta["agent_a"], meta["agent_b"], np.array(rows_a), np.array(rows_b),
                         meta["encoding_a"], meta["encoding_b"], meta["provenance"])
