import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from conftest import planar_arm
from sydachain import ValidationError
from sydachain.fixtures import humanoid, robot, three_agents
from sydachain.kinematics import (
    AgentModel,
    JointSpec,
    forward_kinematics,
    jacobian,
    keypoint_array,
    keypoint_jacobian,
    keypoints_with_jacobians,
    manipulability,
    manipulability_from_jacobian,
    sample_workspace,
)

AGENTS = list(three_agents()) + [planar_arm((1.0, 0.7, 0.4), "planar_3r")]


def homogeneous_fk(agent: AgentModel, q) -> np.ndarray:
    """Link tips by composing 4x4 transforms, one joint at a time."""
    tips, frames = [], []
    for j, joint in enumerate(agent.joints):
        parent = frames[joint.parent] if joint.parent >= 0 else np.eye(4)
        shift = np.eye(4)
        shift[:3, 3] = joint.origin
        if joint.parent >= 0:
            shift[:3, 3] += agent.link_lengths[joint.parent] * np.asarray(agent.joints[joint.parent].link_direction)
        rot = np.eye(4)
        rot[:3, :3] = Rotation.from_rotvec(np.asarray(joint.axis) * q[j]).as_matrix()
        frame = parent @ shift @ rot
        frames.append(frame)
        tips.append((frame @ np.r_[agent.link_lengths[j] * np.asarray(joint.link_direction), 1.0])[:3])
    return np.array(tips)


def random_poses(agent, n, seed):
    return np.random.default_rng(seed).uniform(agent.lower, agent.upper, size=(n, agent.dof))


def central_difference(f, q, h=1e-6):
    cols = []
    for i in range(len(q)):
        e = np.zeros_like(q)
        e[i] = h
        cols.append((f(q + e) - f(q - e)) / (2 * h))
    return np.stack(cols, axis=-1)


@pytest.mark.parametrize("agent", AGENTS, ids=lambda a: a.name)
def test_fk_matches_transform_composition(agent):
    for q in random_poses(agent, 25, 1):
        tips = homogeneous_fk(agent, q)
        fk = forward_kinematics(agent, q)
        for name, j in agent.keypoints.items():
            np.testing.assert_allclose(fk[name], tips[j], atol=1e-12)


def test_planar_fk_closed_form(planar_2r):
    q = np.array([0.3, -1.1])
    fk = forward_kinematics(planar_2r, q)
    expect = [2 * np.cos(0.3) + 3 * np.cos(0.3 - 1.1), 2 * np.sin(0.3) + 3 * np.sin(0.3 - 1.1), 0.0]
    np.testing.assert_allclose(fk["p1"], expect, atol=1e-12)


def test_batched_fk_equals_single_pose():
    agent = AGENTS[0]
    poses = random_poses(agent, 7, 2)
    batch = keypoint_array(agent, poses)
    for i, q in enumerate(poses):
        np.testing.assert_array_equal(batch[i], keypoint_array(agent, q)[0])


def test_manipulability_2r_oracle(planar_2r):
    poses = random_poses(planar_2r, 1000, 3)
    m = manipulability(planar_2r, poses, "arm")
    np.testing.assert_allclose(m, np.abs(2.0 * 3.0 * np.sin(poses[:, 1])), rtol=0, atol=1e-9)


def test_manipulability_known_value(planar_2r):
    assert manipulability(planar_2r, [0.4, np.pi / 6], "arm") == pytest.approx(3.0, abs=1e-12)


def test_manipulability_zero_when_stretched(planar_2r):
    assert manipulability(planar_2r, [0.9, 0.0], "arm") == pytest.approx(0.0, abs=1e-12)


def test_manipulability_square_matrix_is_abs_det():
    jac = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.5], [0.3, 0.0, 2.0]])
    assert manipulability_from_jacobian(jac) == pytest.approx(abs(np.linalg.det(jac)), rel=1e-12)


@pytest.mark.parametrize("agent", AGENTS, ids=lambda a: a.name)
def test_jacobians_match_finite_differences(agent):
    for q in random_poses(agent, 10, 4):
        for chain in agent.chains:
            analytic = jacobian(agent, q, chain)
            tip_joint = agent.chains[chain][-1]
            name = next(k for k, j in agent.keypoints.items() if j == tip_joint)
            numeric = central_difference(lambda x: forward_kinematics(agent, x)[name], q)
            cols = list(agent.chains[chain])
            err = np.linalg.norm(analytic - numeric[:, cols]) / max(np.linalg.norm(numeric[:, cols]), 1e-12)
            assert err < 1e-6


def test_keypoint_jacobian_is_zero_for_unrelated_joints():
    agent = AGENTS[0]
    q = random_poses(agent, 1, 5)[0]
    jac = keypoint_jacobian(agent, q, "right_wrist")
    left = list(agent.chains["left_arm"])
    np.testing.assert_array_equal(jac[:, left], 0.0)


def test_keypoints_with_jacobians_stacks_per_keypoint():
    agent = AGENTS[1]
    q = random_poses(agent, 1, 6)[0]
    names = ["right_elbow", "left_wrist"]
    pts, jac = keypoints_with_jacobians(agent, q, names)
    fk = forward_kinematics(agent, q)
    for i, n in enumerate(names):
        np.testing.assert_allclose(pts[i], fk[n], atol=1e-14)
        np.testing.assert_allclose(jac[i], keypoint_jacobian(agent, q, n), atol=1e-14)


@given(st.lists(st.floats(-np.pi, np.pi), min_size=3, max_size=3))
def test_link_lengths_are_preserved(angles):
    agent = planar_arm((1.0, 0.7, 0.4))
    pts = keypoint_array(agent, np.array(angles))[0]
    np.testing.assert_allclose(np.linalg.norm(np.diff(np.vstack([[0, 0, 0], pts]), axis=0), axis=1),
                               [1.0, 0.7, 0.4], atol=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_manipulability_nonnegative_and_bounded(seed):
    agent = AGENTS[2]
    q = random_poses(agent, 20, seed)
    m = manipulability(agent, q, "right_arm")
    assert np.all(m >= 0)
    # Hadamard: det(J J^T) <= product of squared row norms <= (sum of lever arms)^6 / 27
    assert np.all(m <= agent.chain_reach("right_arm") ** 3)


def test_joint_validation():
    with pytest.raises(ValidationError, match="unit"):
        JointSpec((1.0, 1.0, 0.0), (-1, 1))
    with pytest.raises(ValidationError, match="lower < upper"):
        JointSpec((1.0, 0.0, 0.0), (1, -1))
    with pytest.raises(ValidationError, match="finite"):
        JointSpec((1.0, 0.0, 0.0), (-np.inf, 1))


def test_agent_validation():
    j = JointSpec((0.0, 0.0, 1.0), (-1, 1))
    with pytest.raises(ValidationError, match="link lengths"):
        AgentModel("bad", (j,), (0.0,), {"p": 0}, {"arm": (0,)})
    with pytest.raises(ValidationError):
        AgentModel("bad", (j,), (1.0,), {"p": 3}, {"arm": (0,)})
    with pytest.raises(ValidationError):
        AgentModel("bad", (j,), (1.0,), {"p": 0}, {"arm": (0,)}, feature_encoding="quaternions")


def test_unknown_chain_lists_known_ones(planar_2r):
    with pytest.raises(ValidationError, match="arm"):
        jacobian(planar_2r, [0, 0], "leg")


def test_pose_width_checked(planar_2r):
    with pytest.raises(ValidationError):
        forward_kinematics(planar_2r, [0.0, 0.0, 0.0])


@pytest.mark.parametrize("agent", AGENTS, ids=lambda a: a.name)
def test_spec_round_trip(agent, tmp_path):
    path = tmp_path / "agent.json"
    agent.save(path)
    again = AgentModel.load(path)
    assert again == agent
    assert json.loads(path.read_text())["schema_version"] == 1


def test_humanoid_scales_with_height():
    small, large = humanoid("s", 1.4, 0.0), humanoid("l", 1.75, 0.0)
    assert small.total_length / large.total_length == pytest.approx(1.4 / 1.75)
    q = random_poses(large, 5, 7)
    np.testing.assert_allclose(keypoint_array(small, q), keypoint_array(large, q) * 1.4 / 1.75, atol=1e-12)


def test_robot_publishes_joint_angles():
    assert robot().feature_encoding == "joint_angles"
    assert robot().feature_width == robot().dof


class TestWorkspace:
    def test_cells_hold_max_manipulability(self, planar_2r):
        grid = sample_workspace(planar_2r, "arm", n_samples=4000, cell_size=0.5, seed=3)
        rng = np.random.default_rng([3, 0])
        q = rng.uniform(planar_2r.lower, planar_2r.upper, size=(4000, 2))
        tips = keypoint_array(planar_2r, q)[:, 1]
        m = manipulability(planar_2r, q, "arm")
        cells = np.floor(tips / 0.5).astype(int)
        expect = {}
        for c, v in zip(map(tuple, cells.tolist()), m):
            expect[c] = max(expect.get(c, -1.0), v)
        assert grid.cells.keys() == expect.keys()
        for c, v in expect.items():
            assert grid.cells[c] == pytest.approx(v, abs=0)

    def test_deterministic_and_prefix_stable(self, planar_2r):
        a = sample_workspace(planar_2r, "arm", 25_000, 0.5, seed=9)
        b = sample_workspace(planar_2r, "arm", 25_000, 0.5, seed=9)
        assert a == b
        # the first 10000-sample batch is shared, so every cell of the small run appears in the large one
        small = sample_workspace(planar_2r, "arm", 10_000, 0.5, seed=9)
        assert all(a.cells[c] >= v for c, v in small.cells.items())

    def test_default_cell_size_is_twentieth_of_length(self, planar_2r):
        grid = sample_workspace(planar_2r, "arm", 1000)
        assert grid.cell_size == pytest.approx(5.0 / 20)

    def test_lattice_anchored_at_origin(self, planar_2r):
        grid = sample_workspace(planar_2r, "arm", 2000, 1.0)
        assert all(isinstance(i, int) for c in grid.cells for i in c)
        assert all(abs(i) <= 5 for c in grid.cells for i in c)

    def test_rejects_bad_arguments(self, planar_2r):
        with pytest.raises(ValidationError):
            sample_workspace(planar_2r, "arm", 0)
        with pytest.raises(ValidationError):
            sample_workspace(planar_2r, "arm", 10, cell_size=-1.0)
