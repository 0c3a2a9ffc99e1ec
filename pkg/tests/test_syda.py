import numpy as np
import pytest
from hypothesis import given, strategies as st

from sydachain import ValidationError
from sydachain.datagen import CorrespondenceMap, MimicConfig, add_sensor_noise, generate_paired_dataset
from sydachain.fixtures import humanoid, robot
from sydachain.neuralnet import TrainConfig, finite_difference_grads, init_network, relative_error
from sydachain.syda import (
    Architecture,
    EvalReport,
    MappingStage,
    Standardizer,
    SydaModel,
    aggregate_folds,
    avg_distance_error,
    chain_map,
    cross_validate,
    cv_folds,
    keypoint_distances,
    load_model,
    map_backward,
    map_forward,
    save_model,
    syda_loss,
    train_direct,
    train_syda,
)

SMALL = humanoid("small", 1.42, 0.025)
LARGE = humanoid("large", 1.75, 0.019)
ROBOT = robot("robot", 0.0)
ARCH = Architecture(latent_width=5, hidden_widths=(16, 8))
FAST = TrainConfig(learning_rate=3e-3, epochs=30, batch_size=32)


def make(leader, follower, n, seed):
    ds = generate_paired_dataset(leader, follower, CorrespondenceMap.by_name(leader, follower), n, seed,
                                 config=MimicConfig(restart_threshold=0.06))
    return add_sensor_noise(ds, leader.sensor_noise_sigma, follower.sensor_noise_sigma, seed + 1)


@pytest.fixture(scope="module")
def ls_data():
    return make(LARGE, SMALL, 150, 0)


@pytest.fixture(scope="module")
def rs_data():
    return make(ROBOT, SMALL, 150, 1)


def random_model(wa, wb, latent, hidden, seed):
    arch = Architecture(latent, hidden)
    nets = [init_network(arch.encoder_specs(wa, latent), seed), init_network(arch.decoder_specs(wa, latent), seed + 1),
            init_network(arch.encoder_specs(wb, latent), seed + 2), init_network(arch.decoder_specs(wb, latent), seed + 3)]
    ident = lambda w: Standardizer(np.zeros(w), np.ones(w))  # noqa: E731
    return SydaModel(*nets, latent, ident(wa), ident(wb), "a", "b")


def test_composed_loss_gradient_matches_finite_differences():
    model = random_model(6, 9, 3, (8, 5), 10)
    rng = np.random.default_rng(0)
    xa, xb = rng.normal(size=(7, 6)), rng.normal(size=(7, 9))
    (la, lb, lz), grads = syda_loss(model, xa, xb, 1.0)
    params = [p for net in model.networks().values() for p in net.arrays()]
    total = lambda: sum(syda_loss(model, xa, xb, 1.0)[0][i] * w for i, w in enumerate((1, 1, 1)))  # noqa: E731
    numeric = finite_difference_grads(total, params, 1e-7)
    assert relative_error(np.concatenate([g.ravel() for g in grads]),
                          np.concatenate([n.ravel() for n in numeric])) < 1e-4
    assert la + lb + lz == pytest.approx(total())


def test_latent_weight_scales_only_latent_term():
    model = random_model(4, 5, 2, (3,), 1)
    rng = np.random.default_rng(1)
    xa, xb = rng.normal(size=(5, 4)), rng.normal(size=(5, 5))
    (_, _, lz), g0 = syda_loss(model, xa, xb, 0.0)
    _, g1 = syda_loss(model, xa, xb, 1.0)
    _, g2 = syda_loss(model, xa, xb, 2.0)
    for a, b, c in zip(g0, g1, g2):
        np.testing.assert_allclose(c - b, b - a, atol=1e-14)
    assert lz > 0


def test_architecture_defaults():
    arch = Architecture()
    assert arch.latent_for(12, 6) == 2
    assert arch.hidden_for(12, 2) == [7, 4]  # 12 * (1/6)**(1/3) = 6.6, 12 * (1/6)**(2/3) = 3.6
    specs = arch.encoder_specs(12, 2)
    assert [s.activation for s in specs] == ["tanh", "tanh", "identity"]
    assert [s.output_width for s in arch.decoder_specs(12, 2)] == [4, 7, 12]


def test_latent_must_be_narrower(ls_data):
    with pytest.raises(ValidationError, match="latent width"):
        train_syda(ls_data, Architecture(latent_width=12), FAST)


def test_training_reduces_loss_and_is_deterministic(ls_data):
    model, rep = train_syda(ls_data, ARCH, FAST)
    assert rep.epochs == FAST.epochs
    assert rep.total[-1] < 0.5 * rep.total[0]
    again, rep2 = train_syda(ls_data, ARCH, FAST)
    assert rep.total == rep2.total
    np.testing.assert_array_equal(map_forward(model, ls_data.features_a), map_forward(again, ls_data.features_a))


def test_one_model_maps_both_directions(ls_data):
    model, _ = train_syda(ls_data, ARCH, FAST)
    fwd = map_forward(model, ls_data.features_a)
    bwd = map_backward(model, ls_data.features_b)
    assert fwd.shape == ls_data.features_b.shape and bwd.shape == ls_data.features_a.shape
    assert np.mean(keypoint_distances(SMALL, fwd, ls_data.features_b)[1]) < 0.2
    assert np.mean(keypoint_distances(LARGE, bwd, ls_data.features_a)[1]) < 0.2


def test_direct_model_is_one_way(ls_data):
    direct, rep = train_direct(ls_data, ARCH, FAST)
    assert rep.l_a == [] and len(rep.total) == FAST.epochs
    with pytest.raises(ValidationError):
        map_backward(direct, ls_data.features_b)
    with pytest.raises(ValidationError):
        MappingStage(direct, reverse=True)


def test_chain_map_decodes_each_stage(ls_data, rs_data):
    m1, _ = train_syda(ls_data, ARCH, FAST)  # large -> small
    m2, _ = train_syda(rs_data, ARCH, FAST)  # robot -> small, used reversed
    stages = [MappingStage(m1), MappingStage(m2, reverse=True)]
    final, inter = chain_map(stages, ls_data.features_a[:10])
    np.testing.assert_array_equal(inter[0], map_forward(m1, ls_data.features_a[:10]))
    np.testing.assert_array_equal(final, map_backward(m2, inter[0]))
    assert final.shape == (10, ROBOT.dof)
    with pytest.raises(ValidationError, match="disagree"):
        chain_map([MappingStage(m2, reverse=True), MappingStage(m1)], rs_data.features_b)


def test_cv_folds_partition():
    folds = cv_folds(10, 3, 0)
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))
    assert [len(f) for f in folds] == [4, 3, 3]
    assert all(np.array_equal(a, b) for a, b in zip(folds, cv_folds(10, 3, 0)))
    with pytest.raises(ValidationError):
        cv_folds(2, 3, 0)


def test_fold_aggregation_by_hand():
    d1 = np.array([[0.1, 0.3], [0.2, 0.2]])
    d2 = np.array([[0.4, 0.0]])
    rep = aggregate_folds(["elbow", "wrist"], [d1, d2])
    np.testing.assert_allclose(rep.mean, [0.7 / 3, 0.5 / 3])
    assert rep.total == pytest.approx((0.7 / 3 + 0.5 / 3) / 2)
    assert rep.folds == pytest.approx([0.2, 0.2])
    assert rep.std[1] == pytest.approx(np.std([0.3, 0.2, 0.0]))


def test_perfect_prediction_gives_zero_errors(ls_data):
    rep = avg_distance_error(SMALL, ls_data.features_b, ls_data.features_b)
    assert rep.total == 0.0
    assert all(line.endswith(",0.0,0.0") for line in rep.to_csv().splitlines()[1:])


def test_eval_report_csv_layout():
    rep = EvalReport.from_distances(["a", "b"], [[1.0, 2.0], [3.0, 4.0]])
    assert rep.to_csv().splitlines() == ["keypoint,mean_m,std_m", "a,2.0,1.0", "b,3.0,1.0",
                                         f"total,2.5,{float(np.std([1.0, 2.0, 3.0, 4.0]))!r}"]


def test_errors_for_joint_angle_targets_use_forward_kinematics(rs_data):
    rep = avg_distance_error(ROBOT, rs_data.features_a + 0.01, rs_data.features_a)
    assert 0 < rep.total < 0.05
    assert rep.keypoints == ["right_elbow", "right_wrist", "left_elbow", "left_wrist"]


def test_cross_validation_reproducible_and_reversible(ls_data):
    cfg = TrainConfig(learning_rate=3e-3, epochs=5)
    a = cross_validate(ls_data, "syda", ARCH, cfg, SMALL, k=3)
    b = cross_validate(ls_data, "syda", ARCH, cfg, SMALL, k=3)
    np.testing.assert_array_equal(a.distances, b.distances)
    assert len(a.folds) == 3 and a.distances.shape == (150, 4)
    rev = cross_validate(ls_data, "direct", ARCH, cfg, LARGE, k=3, reverse=True)
    assert np.isfinite(rev.total)
    with pytest.raises(ValidationError, match="does not match"):
        cross_validate(ls_data, "syda", ARCH, cfg, LARGE, k=3)


@pytest.mark.parametrize("method", ["syda", "direct"])
def test_model_file_round_trip(method, ls_data, tmp_path):
    train = train_syda if method == "syda" else train_direct
    model, _ = train(ls_data, ARCH, FAST)
    path = tmp_path / "m.json"
    save_model(model, path, {"note": "x"})
    back = load_model(path)
    np.testing.assert_array_equal(map_forward(back, ls_data.features_a), map_forward(model, ls_data.features_a))
    save_model(back, tmp_path / "n.json", {"note": "x"})
    assert (tmp_path / "n.json").read_bytes() == path.read_bytes()


def test_standardizer_floors_constant_features():
    x = np.c_[np.arange(5.0), np.full(5, 2.0)]
    s = Standardizer.fit(x)
    assert s.floored == (1,)
    assert np.all(np.isfinite(s.apply(x)))
    np.testing.assert_allclose(s.invert(s.apply(x)), x)


@given(st.integers(0, 1000))
def test_standardizer_round_trip(seed):
    x = np.random.default_rng(seed).normal(3, 2, size=(20, 4))
    s = Standardizer.fit(x)
    np.testing.assert_allclose(s.invert(s.apply(x)), x, atol=1e-12)
    np.testing.assert_allclose(s.apply(x).mean(axis=0), 0, atol=1e-12)
