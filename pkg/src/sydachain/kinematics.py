"""Articulated agents: forward kinematics, Jacobians, manipulability, workspace grids.

Agents are trees of revolute joints. Joint ``j`` sits at ``origin`` (expressed in
its parent's frame, measured from the parent's link tip), rotates about ``axis``
and carries a rigid link of length ``link_lengths[j]`` along ``link_direction``.
Keypoints are link tips. All agents share one base frame at the world origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sydachain import ValidationError

SCHEMA_VERSION = 1
ENCODINGS = ("joint_angles", "cartesian_keypoints")
DEFAULT_SAMPLES = 50_000
SAMPLE_BATCH = 10_000


@dataclass(frozen=True)
class JointSpec:
    axis: tuple[float, float, float]
    limits: tuple[float, float]
    parent: int = -1
    name: str = ""
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    link_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ValidationError(f"joint {self.name!r}: axis must be a unit 3-vector, got {self.axis}")
        lo, hi = self.limits
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise ValidationError(f"joint {self.name!r}: limits must be finite with lower < upper, got {self.limits}")
        d = np.asarray(self.link_direction, dtype=float)
        if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValidationError(f"joint {self.name!r}: link_direction must be a unit 3-vector")
        if np.asarray(self.origin, dtype=float).shape != (3,):
            raise ValidationError(f"joint {self.name!r}: origin must be a 3-vector")


@dataclass(frozen=True)
class AgentModel:
    name: str
    joints: tuple[JointSpec, ...]
    link_lengths: tuple[float, ...]
    keypoints: dict[str, int]
    chains: dict[str, tuple[int, ...]]
    sensor_noise_sigma: float = 0.0
    feature_encoding: str = "cartesian_keypoints"
    reference_length: float | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.joints)
        if n == 0:
            raise ValidationError(f"agent {self.name!r} has no joints")
        if len(self.link_lengths) != n:
            raise ValidationError(f"agent {self.name!r}: {n} joints but {len(self.link_lengths)} link lengths")
        if any(not (l > 0 and math.isfinite(l)) for l in self.link_lengths):
            raise ValidationError(f"agent {self.name!r}: link lengths must be positive")
        for j, joint in enumerate(self.joints):
            if not -1 <= joint.parent < j:
                raise ValidationError(f"agent {self.name!r}: joint {j} parent {joint.parent} must precede it")
        for kp, j in self.keypoints.items():
            if not 0 <= j < n:
                raise ValidationError(f"agent {self.name!r}: keypoint {kp!r} references joint {j}")
        if not self.chains:
            raise ValidationError(f"agent {self.name!r} declares no chains")
        for cname, idx in self.chains.items():
            if not idx or self.joints[idx[0]].parent != -1:
                raise ValidationError(f"agent {self.name!r}: chain {cname!r} must start at a base joint")
            for prev, cur in zip(idx, idx[1:]):
                if self.joints[cur].parent != prev:
                    raise ValidationError(f"agent {self.name!r}: chain {cname!r} is not a contiguous joint path")
        if not self.sensor_noise_sigma >= 0:
            raise ValidationError(f"agent {self.name!r}: sensor_noise_sigma must be >= 0")
        if self.feature_encoding not in ENCODINGS:
            raise ValidationError(f"agent {self.name!r}: unknown feature encoding {self.feature_encoding!r}")
        if self.reference_length is not None and not self.reference_length > 0:
            raise ValidationError(f"agent {self.name!r}: reference_length must be positive")

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def lower(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    @property
    def total_length(self) -> float:
        """Sum of link lengths along the longest chain."""
        return max(sum(self.link_lengths[j] for j in idx) for idx in self.chains.values())

    @property
    def length_for_ratio(self) -> float:
        return self.reference_length if self.reference_length is not None else self.total_length

    @property
    def keypoint_names(self) -> list[str]:
        return list(self.keypoints)

    @property
    def feature_width(self) -> int:
        if self.feature_encoding == "joint_angles":
            return self.dof
        return 3 * len(self.keypoints)

    def chain_reach(self, chain: str) -> float:
        """Upper bound on the distance from the base to any point of ``chain``."""
        idx = self._chain(chain)
        return float(sum(np.linalg.norm(self.joints[j].origin) + self.link_lengths[j] for j in idx))

    def _chain(self, chain: str) -> tuple[int, ...]:
        try:
            return self.chains[chain]
        except KeyError:
            raise ValidationError(f"agent {self.name!r} has no chain {chain!r}; known: {sorted(self.chains)}") from None

    def _arrays(self):
        if "arrays" not in self._cache:
            axes = np.array([j.axis for j in self.joints], dtype=float)
            skew = np.zeros((self.dof, 3, 3))
            skew[:, 0, 1], skew[:, 0, 2] = -axes[:, 2], axes[:, 1]
            skew[:, 1, 0], skew[:, 1, 2] = axes[:, 2], -axes[:, 0]
            skew[:, 2, 0], skew[:, 2, 1] = -axes[:, 1], axes[:, 0]
            links = np.array([j.link_direction for j in self.joints]) * np.array(self.link_lengths)[:, None]
            origins = np.array([j.origin for j in self.joints], dtype=float)
            self._cache["arrays"] = (axes, skew, skew @ skew, links, origins)
        return self._cache["arrays"]

    def validate_pose(self, pose, *, check_limits: bool = False) -> np.ndarray:
        q = np.asarray(pose, dtype=float)
        if q.shape[-1:] != (self.dof,):
            raise ValidationError(f"agent {self.name!r} expects {self.dof} joint angles, got shape {q.shape}")
        if check_limits and (np.any(q < self.lower - 1e-12) or np.any(q > self.upper + 1e-12)):
            raise ValidationError(f"pose outside joint limits of agent {self.name!r}")
        return q

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "joints": [
                {
                    "name": j.name,
                    "axis": list(j.axis),
                    "limits": list(j.limits),
                    "parent": j.parent,
                    "origin": list(j.origin),
                    "link_direction": list(j.link_direction),
                }
                for j in self.joints
            ],
            "link_lengths": list(self.link_lengths),
            "keypoints": dict(self.keypoints),
            "chains": {k: list(v) for k, v in self.chains.items()},
            "sensor_noise_sigma": self.sensor_noise_sigma,
            "feature_encoding": self.feature_encoding,
            "reference_length": self.reference_length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentModel":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported agent schema_version {version!r}")
        try:
            joints = tuple(
                JointSpec(
                    axis=tuple(j["axis"]),
                    limits=tuple(j["limits"]),
                    parent=int(j.get("parent", -1)),
                    name=j.get("name", f"j{i}"),
                    origin=tuple(j.get("origin", (0.0, 0.0, 0.0))),
                    link_direction=tuple(j.get("link_direction", (1.0, 0.0, 0.0))),
                )
                for i, j in enumerate(data["joints"])
            )
            return cls(
                name=data["name"],
                joints=joints,
                link_lengths=tuple(float(x) for x in data["link_lengths"]),
                keypoints={k: int(v) for k, v in data["keypoints"].items()},
                chains={k: tuple(int(i) for i in v) for k, v in data["chains"].items()},
                sensor_noise_sigma=float(data.get("sensor_noise_sigma", 0.0)),
                feature_encoding=data.get("feature_encoding", "cartesian_keypoints"),
                reference_length=data.get("reference_length"),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed agent spec: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "AgentModel":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"agent spec not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)


def _frames(agent: AgentModel, q: np.ndarray):
    """Batched joint rotations, joint positions and link tips; q has shape (n, dof)."""
    axes, skew, skew2, links, origins = agent._arrays()
    n = q.shape[0]
    s = np.sin(q)[:, :, None, None]
    c = np.cos(q)[:, :, None, None]
    local = np.eye(3) + s * skew + (1.0 - c) * skew2  # (n, dof, 3, 3)
    rot = np.empty((n, agent.dof, 3, 3))
    pos = np.empty((n, agent.dof, 3))
    tip = np.empty((n, agent.dof, 3))
    for j, joint in enumerate(agent.joints):
        p = joint.parent
        if p < 0:
            rot[:, j] = local[:, j]
            pos[:, j] = origins[j]
        else:
            rot[:, j] = rot[:, p] @ local[:, j]
            pos[:, j] = tip[:, p] + rot[:, p] @ origins[j]
        tip[:, j] = pos[:, j] + rot[:, j] @ links[j]
    return rot, pos, tip


def forward_kinematics(agent: AgentModel, pose) -> dict[str, np.ndarray]:
    """Keypoint positions (meters) for a pose of shape (dof,) or a batch (n, dof)."""
    q = agent.validate_pose(pose)
    single = q.ndim == 1
    _, _, tip = _frames(agent, np.atleast_2d(q))
    out = {name: tip[:, j] for name, j in agent.keypoints.items()}
    if single:
        out = {k: v[0] for k, v in out.items()}
    return out


def keypoint_array(agent: AgentModel, poses) -> np.ndarray:
    """Keypoints as an array of shape (n, n_keypoints, 3) in declared order."""
    q = np.atleast_2d(agent.validate_pose(poses))
    _, _, tip = _frames(agent, q)
    return tip[:, list(agent.keypoints.values())]


def _ancestors(agent: AgentModel, j: int) -> list[int]:
    key = ("ancestors", j)
    if key not in agent._cache:
        path = []
        while j >= 0:
            path.append(j)
            j = agent.joints[j].parent
        agent._cache[key] = path[::-1]
    return agent._cache[key]


def _point_jacobian(agent: AgentModel, q: np.ndarray, joint: int, columns) -> np.ndarray:
    rot, pos, tip = _frames(agent, q)
    axes = agent._arrays()[0]
    target = tip[:, joint]
    jac = np.zeros((q.shape[0], 3, len(columns)))
    ancestors = set(_ancestors(agent, joint))
    for col, i in enumerate(columns):
        if i in ancestors:
            omega = rot[:, i] @ axes[i]
            jac[:, :, col] = np.cross(omega, target - pos[:, i])
    return jac


def jacobian(agent: AgentModel, pose, chain: str) -> np.ndarray:
    """Positional Jacobian (3 x chain dof) of the chain tip; batched input gives (n, 3, k)."""
    idx = agent._chain(chain)
    q = agent.validate_pose(pose)
    jac = _point_jacobian(agent, np.atleast_2d(q), idx[-1], idx)
    return jac[0] if q.ndim == 1 else jac


def keypoint_jacobian(agent: AgentModel, pose, keypoint: str) -> np.ndarray:
    """Positional Jacobian (3 x dof) of a keypoint with respect to every joint."""
    if keypoint not in agent.keypoints:
        raise ValidationError(f"agent {agent.name!r} has no keypoint {keypoint!r}")
    q = agent.validate_pose(pose)
    jac = _point_jacobian(agent, np.atleast_2d(q), agent.keypoints[keypoint], range(agent.dof))
    return jac[0] if q.ndim == 1 else jac


def keypoints_with_jacobians(agent: AgentModel, pose, names) -> tuple[np.ndarray, np.ndarray]:
    """Positions (K, 3) and full-pose Jacobians (K, 3, dof) of the named keypoints at one pose."""
    q = np.atleast_2d(agent.validate_pose(pose))
    rot, pos, tip = _frames(agent, q)
    rot, pos, tip = rot[0], pos[0], tip[0]
    axes = agent._arrays()[0]
    omega = np.einsum("jab,jb->ja", rot, axes)
    joints = [agent.keypoints[k] for k in names]
    points = tip[joints]
    jac = np.zeros((len(joints), 3, agent.dof))
    for k, j in enumerate(joints):
        for i in _ancestors(agent, j):
            jac[k, :, i] = np.cross(omega[i], points[k] - pos[i])
    return points, jac


def manipulability_from_jacobian(jac: np.ndarray) -> np.ndarray:
    # chains with fewer than 3 joints span a lower-dimensional task space; JJ^T is
    # then singular and the measure is taken over J^T J (same nonzero singular values)
    jt = np.swapaxes(jac, -1, -2)
    gram = jt @ jac if jac.shape[-1] < jac.shape[-2] else jac @ jt
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None))


def manipulability(agent: AgentModel, pose, chain: str):
    """Yoshikawa measure sqrt(det(J J^T)), clamped at zero against round-off."""
    m = manipulability_from_jacobian(jacobian(agent, pose, chain))
    return float(m) if np.ndim(m) == 0 else m


def chain_tip(agent: AgentModel, poses, chain: str) -> np.ndarray:
    idx = agent._chain(chain)
    q = np.atleast_2d(agent.validate_pose(poses))
    _, _, tip = _frames(agent, q)
    return tip[:, idx[-1]]


@dataclass(frozen=True)
class WorkspaceGrid:
    """Occupied cells of a lattice anchored at the base origin.

    ``cells`` maps integer index ``floor(p / cell_size)`` to the best
    manipulability seen in that cell.
    """

    cell_size: float
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]]
    cells: dict[tuple[int, int, int], float]
    samples_used: int
    seed: int

    def index_range(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = np.asarray(self.bounds[0]), np.asarray(self.bounds[1])
        return np.floor(lo / self.cell_size).astype(int), np.floor(hi / self.cell_size).astype(int)

    def __len__(self):
        return len(self.cells)

    def value(self, index) -> float:
        return self.cells.get(tuple(index), 0.0)


def default_bounds(reach: float) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    r = float(reach)
    return (-r, -r, -r), (r, r, r)


def sample_workspace(
    agent: AgentModel,
    chain: str,
    n_samples: int = DEFAULT_SAMPLES,
    cell_size: float | None = None,
    seed: int = 0,
    bounds=None,
) -> WorkspaceGrid:
    """Uniform joint-space sampling binned into a grid of per-cell maximum manipulability.

    Batch ``b`` draws from ``default_rng([seed, b])`` so a prefix of a larger run
    reproduces a smaller one exactly.
    """
    if n_samples <= 0:
        raise ValidationError("n_samples must be positive")
    if cell_size is None:
        cell_size = agent.total_length / 20.0
    if not cell_size > 0:
        raise ValidationError("cell_size must be positive")
    idx = agent._chain(chain)
    if bounds is None:
        bounds = default_bounds(agent.chain_reach(chain))
    bounds = (tuple(float(x) for x in bounds[0]), tuple(float(x) for x in bounds[1]))
    lo_i = np.floor(np.asarray(bounds[0]) / cell_size).astype(int)
    hi_i = np.floor(np.asarray(bounds[1]) / cell_size).astype(int)

    lower, upper = agent.lower, agent.upper
    best: dict[tuple[int, int, int], float] = {}
    for b, start in enumerate(range(0, n_samples, SAMPLE_BATCH)):
        size = min(SAMPLE_BATCH, n_samples - start)
        rng = np.random.default_rng([seed, b])
        q = rng.uniform(lower, upper, size=(size, agent.dof))
        tips = chain_tip(agent, q, chain)
        m = manipulability_from_jacobian(_point_jacobian(agent, q, idx[-1], idx))
        cell = np.floor(tips / cell_size).astype(int)
        inside = np.all((cell >= lo_i) & (cell <= hi_i), axis=1)
        cell, m = cell[inside], m[inside]
        if len(cell) == 0:
            continue
        uniq, inverse = np.unique(cell, axis=0, return_inverse=True)
        cell_max = np.full(len(uniq), -np.inf)
        np.maximum.at(cell_max, inverse.ravel(), m)
        for key, val in zip(map(tuple, uniq.tolist()), cell_max.tolist()):
            if val > best.get(key, -1.0):
                best[key] = val
    return WorkspaceGrid(
        cell_size=float(cell_size),
        bounds=bounds,
        cells=dict(sorted(best.items())),
        samples_used=int(n_samples),
        seed=int(seed),
    )
