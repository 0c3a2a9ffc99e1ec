import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import planar_arm
from sydachain import ValidationError
from sydachain.datagen import (
    CorrespondenceMap,
    MimicConfig,
    MotionDataset,
    add_sensor_noise,
    encode_features,
    export_dataset,
    features_to_keypoints,
    generate_paired_dataset,
    import_dataset,
    mimic,
    sample_source_motion,
)
from sydachain.fixtures import humanoid, robot
from sydachain.kinematics import forward_kinematics, keypoint_array

SMALL = humanoid("small", 1.42, 0.025)
LARGE = humanoid("large", 1.75, 0.019)
ROBOT = robot("robot", 0.0)


def test_one_link_out_of_reach_residual():
    arm = planar_arm((1.0,), "one_link")
    res = mimic(arm, {"p0": np.array([2.0, 0.0, 0.0])}, CorrespondenceMap((("p0", "p0", 1.0),)), [0.7])
    assert res.residual == pytest.approx(1.0, abs=1e-9)
    assert res.pose[0] == pytest.approx(0.0, abs=1e-4)


def test_two_link_reachable_target_solved():
    arm = planar_arm((1.0, 1.0))
    target = forward_kinematics(arm, [0.4, 0.9])["p1"]
    res = mimic(arm, {"p1": target}, CorrespondenceMap((("p1", "p1", 1.0),)), [0.0, 0.3])
    assert res.residual < 1e-6
    assert res.converged
    assert all(b <= a + 1e-15 for a, b in zip(res.objective_trace, res.objective_trace[1:]))


def test_mimic_respects_joint_limits():
    arm = planar_arm((1.0, 1.0), limits=(-0.5, 0.5))
    res = mimic(arm, {"p1": np.array([-1.5, 0.5, 0.0])}, CorrespondenceMap((("p1", "p1", 1.0),)), [0.0, 0.0])
    assert np.all(res.pose >= -0.5) and np.all(res.pose <= 0.5)


def test_self_mimicry_recovers_motion():
    ds = generate_paired_dataset(LARGE, LARGE, CorrespondenceMap.by_name(LARGE, LARGE), 120, 4)
    assert ds.provenance["mean_residual_m"] < 1e-6
    np.testing.assert_allclose(ds.features_b, ds.features_a, atol=1e-5)


def test_scaled_humanoid_mimicry_is_exact():
    ds = generate_paired_dataset(LARGE, SMALL, CorrespondenceMap.by_name(LARGE, SMALL), 100, 2)
    assert ds.provenance["max_residual_m"] < 1e-6
    np.testing.assert_allclose(ds.features_b, ds.features_a * SMALL.total_length / LARGE.total_length, atol=1e-5)


def test_generation_is_deterministic():
    cmap = CorrespondenceMap.by_name(ROBOT, SMALL)
    a = generate_paired_dataset(ROBOT, SMALL, cmap, 60, 7)
    b = generate_paired_dataset(ROBOT, SMALL, cmap, 60, 7)
    assert a == b


def test_correspondence_validation():
    with pytest.raises(ValidationError, match="no keypoint"):
        CorrespondenceMap((("nose", "right_wrist", 1.0),)).validate(LARGE, SMALL)
    with pytest.raises(ValidationError, match="negative"):
        CorrespondenceMap((("right_wrist", "right_wrist", -1.0), ("right_elbow", "right_elbow", 1.0))).validate(LARGE, SMALL)
    with pytest.raises(ValidationError, match="share no keypoint"):
        CorrespondenceMap.by_name(LARGE, planar_arm((1.0,)))


def test_correspondence_default_scale_is_length_ratio():
    assert CorrespondenceMap.by_name(LARGE, SMALL).scale == pytest.approx(1.42 / 1.75)


@given(st.integers(1, 300), st.integers(0, 2**31 - 1), st.integers(1, 40))
def test_source_motion_within_limits(n, seed, smoothness):
    poses = sample_source_motion(ROBOT, n, seed, smoothness)
    assert poses.shape == (n, ROBOT.dof)
    assert np.all(poses >= ROBOT.lower) and np.all(poses <= ROBOT.upper)


def test_source_motion_is_smooth():
    poses = sample_source_motion(LARGE, 500, 0)
    span = LARGE.upper - LARGE.lower
    assert np.max(np.abs(np.diff(poses, axis=0)) / span) < 0.15


def test_feature_encodings():
    q = sample_source_motion(ROBOT, 5, 1)
    np.testing.assert_array_equal(encode_features(ROBOT, q), q)
    np.testing.assert_allclose(features_to_keypoints(ROBOT, q), keypoint_array(ROBOT, q))
    f = encode_features(SMALL, q)
    assert f.shape == (5, 12)
    np.testing.assert_array_equal(features_to_keypoints(SMALL, f), keypoint_array(SMALL, q))


def test_sensor_noise_statistics():
    ds = generate_paired_dataset(LARGE, SMALL, CorrespondenceMap.by_name(LARGE, SMALL), 400, 1)
    noisy = add_sensor_noise(ds, 0.02, 0.0, 5)
    assert np.std(noisy.features_a - ds.features_a) == pytest.approx(0.02, rel=0.05)
    np.testing.assert_array_equal(noisy.features_b, ds.features_b)
    assert noisy.provenance["noise_sigma_a"] == 0.02
    with pytest.raises(ValidationError):
        add_sensor_noise(ds, -1.0, 0.0, 0)


@pytest.fixture(scope="module")
def small_dataset():
    ds = generate_paired_dataset(ROBOT, SMALL, CorrespondenceMap.by_name(ROBOT, SMALL), 40, 3,
                                 config=MimicConfig(restart_threshold=0.06))
    return add_sensor_noise(ds, 0.0, 0.025, 4)


def test_dataset_round_trip_exact(small_dataset, tmp_path):
    path = tmp_path / "d.txt"
    export_dataset(small_dataset, path, ["provenance line"])
    back = import_dataset(path, ROBOT, SMALL)
    np.testing.assert_array_equal(back.features_a, small_dataset.features_a)
    np.testing.assert_array_equal(back.features_b, small_dataset.features_b)
    assert back.provenance == small_dataset.provenance
    export_dataset(back, tmp_path / "e.txt", ["provenance line"])
    assert (tmp_path / "e.txt").read_bytes() == path.read_bytes()


def test_truncated_dataset_reports_count(small_dataset, tmp_path):
    path = tmp_path / "d.txt"
    export_dataset(small_dataset, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(ValidationError, match=r"expected 40 rows, found 37 \(truncated"):
        import_dataset(path)


def test_malformed_row_names_line(small_dataset, tmp_path):
    path = tmp_path / "d.txt"
    export_dataset(small_dataset, path)
    lines = path.read_text().splitlines()
    lines[5] = lines[5].rsplit(",", 1)[0]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValidationError, match=r"d\.txt:6: row has widths"):
        import_dataset(path)


def test_dataset_agent_mismatch(small_dataset, tmp_path):
    path = tmp_path / "d.txt"
    export_dataset(small_dataset, path)
    with pytest.raises(ValidationError, match="does not match agent spec"):
        import_dataset(path, LARGE, SMALL)


def test_not_a_dataset(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("hello\n")
    with pytest.raises(ValidationError, match="not a sydachain dataset"):
        import_dataset(path)
    with pytest.raises(ValidationError, match="not found"):
        import_dataset(tmp_path / "missing.txt")


def test_subset_and_swap(small_dataset):
    sub = small_dataset.subset([0, 2])
    assert len(sub) == 2
    sw = small_dataset.swapped()
    assert (sw.agent_a, sw.agent_b) == (small_dataset.agent_b, small_dataset.agent_a)
    np.testing.assert_array_equal(sw.features_a, small_dataset.features_b)
    assert isinstance(sw, MotionDataset)
