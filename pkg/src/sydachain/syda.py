"""SyDa dual autoencoders, the direct-autoencoder baseline, chains and evaluation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sydachain import ValidationError
from sydachain.datagen import MotionDataset, features_to_keypoints
from sydachain.kinematics import AgentModel
from sydachain.neuralnet import (
    AdamState,
    LayerSpec,
    NetworkParams,
    TrainConfig,
    adam_step,
    backward,
    forward,
    init_network,
    l1_loss_and_grad,
    predict,
)

MODEL_FORMAT = "sydachain-model"
MODEL_VERSION = 1
STD_FLOOR = 1e-8
DEFAULT_EVAL_KEYPOINTS = ("right_elbow", "right_wrist", "left_elbow", "left_wrist")


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray
    floored: tuple[int, ...] = ()

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        floored = tuple(int(i) for i in np.flatnonzero(std < STD_FLOOR))
        return cls(mean, np.maximum(std, STD_FLOOR), floored)

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def invert(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "floored": list(self.floored)}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float), tuple(d.get("floored", ())))


@dataclass(frozen=True)
class Architecture:
    """Encoder widths: feature width -> hidden widths -> latent width; decoders mirror them.

    Without explicit ``hidden_widths`` each side tapers geometrically from its own
    feature width to the latent width over ``n_hidden`` layers.
    """

    latent_width: int | None = None
    hidden_widths: tuple[int, ...] | None = None
    n_hidden: int = 2

    def latent_for(self, width_a: int, width_b: int) -> int:
        return self.latent_width if self.latent_width is not None else math.ceil(min(width_a, width_b) / 4)

    def hidden_for(self, width: int, latent: int) -> list[int]:
        if self.hidden_widths is not None:
            return list(self.hidden_widths)
        ratio = latent / width
        return [max(latent, round(width * ratio ** ((k + 1) / (self.n_hidden + 1)))) for k in range(self.n_hidden)]

    def encoder_specs(self, width: int, latent: int) -> list[LayerSpec]:
        widths = [width, *self.hidden_for(width, latent), latent]
        acts = ["tanh"] * (len(widths) - 2) + ["identity"]
        return [LayerSpec(i, o, a) for i, o, a in zip(widths, widths[1:], acts)]

    def decoder_specs(self, width: int, latent: int) -> list[LayerSpec]:
        widths = [latent, *reversed(self.hidden_for(width, latent)), width]
        acts = ["tanh"] * (len(widths) - 2) + ["identity"]
        return [LayerSpec(i, o, a) for i, o, a in zip(widths, widths[1:], acts)]

    def to_dict(self) -> dict:
        return {"latent_width": self.latent_width,
                "hidden_widths": None if self.hidden_widths is None else list(self.hidden_widths),
                "n_hidden": self.n_hidden}


@dataclass
class LossReport:
    l_a: list[float] = field(default_factory=list)
    l_b: list[float] = field(default_factory=list)
    l_latent: list[float] = field(default_factory=list)
    total: list[float] = field(default_factory=list)
    floored_features: dict = field(default_factory=dict)

    @property
    def epochs(self) -> int:
        return len(self.total)


@dataclass
class SydaModel:
    encoder_a: NetworkParams
    decoder_a: NetworkParams
    encoder_b: NetworkParams
    decoder_b: NetworkParams
    latent_width: int
    norm_a: Standardizer
    norm_b: Standardizer
    agent_a: str
    agent_b: str

    kind = "syda"

    def __post_init__(self):
        if not (self.encoder_a.output_width == self.encoder_b.output_width == self.latent_width):
            raise ValidationError("encoder outputs must equal the latent width")
        if self.decoder_a.output_width != len(self.norm_a.mean) or self.decoder_b.output_width != len(self.norm_b.mean):
            raise ValidationError("decoder output widths must equal the feature widths")
        if np.any(self.norm_a.std <= 0) or np.any(self.norm_b.std <= 0):
            raise ValidationError("standardization std entries must be positive")

    @property
    def width_a(self) -> int:
        return self.encoder_a.input_width

    @property
    def width_b(self) -> int:
        return self.encoder_b.input_width

    def networks(self) -> dict[str, NetworkParams]:
        return {"encoder_a": self.encoder_a, "decoder_a": self.decoder_a,
                "encoder_b": self.encoder_b, "decoder_b": self.decoder_b}


@dataclass
class DirectModel:
    net: NetworkParams
    norm_a: Standardizer
    norm_b: Standardizer
    agent_a: str
    agent_b: str

    kind = "direct"

    def __post_init__(self):
        if self.net.input_width != len(self.norm_a.mean) or self.net.output_width != len(self.norm_b.mean):
            raise ValidationError("direct network widths must match the pair's feature widths")

    @property
    def width_a(self) -> int:
        return self.net.input_width

    @property
    def width_b(self) -> int:
        return self.net.output_width

    def networks(self) -> dict[str, NetworkParams]:
        return {"net": self.net}


def _check_width(x, width: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != width:
        raise ValidationError(f"{what} expects feature width {width}, got {x.shape[-1]}")
    return x


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_syda(dataset: MotionDataset, arch: Architecture = Architecture(), config: TrainConfig = TrainConfig()):
    """Train both autoencoders together on total = l_A + l_B + lambda * l_latent."""
    wa, wb = dataset.features_a.shape[1], dataset.features_b.shape[1]
    latent = arch.latent_for(wa, wb)
    if latent >= min(wa, wb):
        raise ValidationError(f"latent width {latent} must be below both feature widths ({wa}, {wb})")
    norm_a, norm_b = Standardizer.fit(dataset.features_a), Standardizer.fit(dataset.features_b)
    xa, xb = norm_a.apply(dataset.features_a), norm_b.apply(dataset.features_b)
    seeds = np.random.SeedSequence(config.seed).spawn(5)
    nets = [
        init_network(arch.encoder_specs(wa, latent), seeds[0]),
        init_network(arch.decoder_specs(wa, latent), seeds[1]),
        init_network(arch.encoder_specs(wb, latent), seeds[2]),
        init_network(arch.decoder_specs(wb, latent), seeds[3]),
    ]
    model = SydaModel(*nets, latent, norm_a, norm_b, dataset.agent_a, dataset.agent_b)
    params = [p for net in nets for p in net.arrays()]
    state = AdamState()
    rng = np.random.default_rng(seeds[4])
    lam = config.latent_loss_weight
    report = LossReport(floored_features={"a": list(norm_a.floored), "b": list(norm_b.floored)})
    n = len(dataset)
    for _ in range(config.epochs):
        sums = np.zeros(3)
        for idx in _batches(n, config.batch_size, rng):
            parts, grads = syda_loss(model, xa[idx], xb[idx], lam)
            adam_step(params, grads, state, config)
            sums += len(idx) * np.array(parts)
        la, lb, lz = sums / n
        report.l_a.append(float(la))
        report.l_b.append(float(lb))
        report.l_latent.append(float(lz))
        report.total.append(float(la + lb + lam * lz))
    return model, report


def syda_loss(model: SydaModel, xa_std: np.ndarray, xb_std: np.ndarray, lam: float = 1.0):
    """(l_A, l_B, l_latent) on standardized features and gradients of l_A + l_B + lam * l_latent.

    Gradients are ordered as the parameters of encoder_a, decoder_a, encoder_b, decoder_b.
    """
    za, c_ea = forward(model.encoder_a, xa_std)
    ra, c_da = forward(model.decoder_a, za)
    zb, c_eb = forward(model.encoder_b, xb_std)
    rb, c_db = forward(model.decoder_b, zb)
    la, g_ra = l1_loss_and_grad(ra, xa_std)
    lb, g_rb = l1_loss_and_grad(rb, xb_std)
    lz, g_z = l1_loss_and_grad(za, zb)
    g_dec_a, g_za = backward(model.decoder_a, c_da, g_ra)
    g_dec_b, g_zb = backward(model.decoder_b, c_db, g_rb)
    g_enc_a, _ = backward(model.encoder_a, c_ea, g_za + lam * g_z)
    g_enc_b, _ = backward(model.encoder_b, c_eb, g_zb - lam * g_z)
    return (la, lb, lz), g_enc_a + g_dec_a + g_enc_b + g_dec_b


def train_direct(dataset: MotionDataset, arch: Architecture = Architecture(), config: TrainConfig = TrainConfig()):
    """Encoder of A stacked on decoder of B, trained on the L1 error of predicted B features."""
    wa, wb = dataset.features_a.shape[1], dataset.features_b.shape[1]
    latent = arch.latent_for(wa, wb)
    if latent >= min(wa, wb):
        raise ValidationError(f"latent width {latent} must be below both feature widths ({wa}, {wb})")
    norm_a, norm_b = Standardizer.fit(dataset.features_a), Standardizer.fit(dataset.features_b)
    xa, xb = norm_a.apply(dataset.features_a), norm_b.apply(dataset.features_b)
    seeds = np.random.SeedSequence(config.seed).spawn(5)
    enc = init_network(arch.encoder_specs(wa, latent), seeds[0])
    dec = init_network(arch.decoder_specs(wb, latent), seeds[3])
    net = NetworkParams(enc.layers + dec.layers)
    params = net.arrays()
    state = AdamState()
    rng = np.random.default_rng(seeds[4])
    report = LossReport(floored_features={"a": list(norm_a.floored), "b": list(norm_b.floored)})
    n = len(dataset)
    for _ in range(config.epochs):
        total = 0.0
        for idx in _batches(n, config.batch_size, rng):
            pred, cache = forward(net, xa[idx])
            loss, g = l1_loss_and_grad(pred, xb[idx])
            grads, _ = backward(net, cache, g)
            adam_step(params, grads, state, config)
            total += len(idx) * loss
        report.total.append(float(total / n))
    return DirectModel(net, norm_a, norm_b, dataset.agent_a, dataset.agent_b), report


def map_forward(model: SydaModel | DirectModel, features_a) -> np.ndarray:
    x = _check_width(features_a, model.width_a, f"mapping {model.agent_a}->{model.agent_b}")
    if isinstance(model, DirectModel):
        return model.norm_b.invert(predict(model.net, model.norm_a.apply(x)))
    z = predict(model.encoder_a, model.norm_a.apply(x))
    return model.norm_b.invert(predict(model.decoder_b, z))


def map_backward(model: SydaModel, features_b) -> np.ndarray:
    if not isinstance(model, SydaModel):
        raise ValidationError("a direct model only maps in its trained direction")
    x = _check_width(features_b, model.width_b, f"mapping {model.agent_b}->{model.agent_a}")
    z = predict(model.encoder_b, model.norm_b.apply(x))
    return model.norm_a.invert(predict(model.decoder_a, z))


@dataclass(frozen=True)
class MappingStage:
    """One directed hop: a model applied forward (A->B) or, for SyDa, backward (B->A)."""

    model: SydaModel | DirectModel
    reverse: bool = False

    def __post_init__(self):
        if self.reverse and not isinstance(self.model, SydaModel):
            raise ValidationError("only SyDa models can be applied in reverse")

    @property
    def source(self) -> str:
        return self.model.agent_b if self.reverse else self.model.agent_a

    @property
    def target(self) -> str:
        return self.model.agent_a if self.reverse else self.model.agent_b

    @property
    def source_width(self) -> int:
        return self.model.width_b if self.reverse else self.model.width_a

    @property
    def target_width(self) -> int:
        return self.model.width_a if self.reverse else self.model.width_b

    def __call__(self, features) -> np.ndarray:
        return map_backward(self.model, features) if self.reverse else map_forward(self.model, features)


def chain_map(stages: list[MappingStage], features) -> tuple[np.ndarray, list[np.ndarray]]:
    """Apply stages in order, fully decoding at each intermediate agent.

    Returns the final features and the decoded intermediates (one per inner agent).
    """
    if not stages:
        raise ValidationError("a chain needs at least one stage")
    for prev, cur in zip(stages, stages[1:]):
        if prev.target != cur.source or prev.target_width != cur.source_width:
            raise ValidationError(
                f"chain stages disagree: {prev.source}->{prev.target} then {cur.source}->{cur.target}"
            )
    x = features
    intermediates = []
    for i, stage in enumerate(stages):
        x = stage(x)
        if i < len(stages) - 1:
            intermediates.append(x)
    return x, intermediates


@dataclass
class EvalReport:
    keypoints: list[str]
    mean: np.ndarray  # per keypoint, meters
    std: np.ndarray
    distances: np.ndarray  # (n_samples, n_keypoints)
    folds: list[float] = field(default_factory=list)  # per-fold total averages

    @property
    def total(self) -> float:
        return float(np.mean(self.mean))

    @property
    def total_std(self) -> float:
        return float(np.std(self.distances))

    @classmethod
    def from_distances(cls, keypoints, distances, folds=()) -> "EvalReport":
        d = np.atleast_2d(np.asarray(distances, dtype=float))
        return cls(list(keypoints), d.mean(axis=0), d.std(axis=0), d, list(folds))

    def rows(self) -> list[tuple[str, float, float]]:
        out = [(k, float(m), float(s)) for k, m, s in zip(self.keypoints, self.mean, self.std)]
        out.append(("total", self.total, self.total_std))
        return out

    def to_csv(self) -> str:
        lines = ["keypoint,mean_m,std_m"] + [f"{k},{m!r},{s!r}" for k, m, s in self.rows()]
        return "\n".join(lines) + "\n"


def eval_keypoints(agent: AgentModel, keypoints=None) -> list[str]:
    if keypoints is None:
        chosen = [k for k in DEFAULT_EVAL_KEYPOINTS if k in agent.keypoints]
        return chosen or agent.keypoint_names
    for k in keypoints:
        if k not in agent.keypoints:
            raise ValidationError(f"agent {agent.name!r} has no keypoint {k!r}")
    return list(keypoints)


def keypoint_distances(agent: AgentModel, predicted, true, keypoints=None) -> tuple[list[str], np.ndarray]:
    names = eval_keypoints(agent, keypoints)
    cols = [agent.keypoint_names.index(k) for k in names]
    p = features_to_keypoints(agent, predicted)[:, cols]
    t = features_to_keypoints(agent, true)[:, cols]
    return names, np.linalg.norm(p - t, axis=2)


def avg_distance_error(agent: AgentModel, predicted, true, keypoints=None) -> EvalReport:
    """Per-keypoint Euclidean error statistics between predicted and true features."""
    names, d = keypoint_distances(agent, predicted, true, keypoints)
    return EvalReport.from_distances(names, d)


def cv_folds(n: int, k: int, seed: int) -> list[np.ndarray]:
    if k < 2 or n < k:
        raise ValidationError(f"need k >= 2 and at least k samples (n={n}, k={k})")
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(order, k)]


def aggregate_folds(keypoints, fold_distances: list[np.ndarray]) -> EvalReport:
    folds = [float(np.mean(np.mean(d, axis=0))) for d in fold_distances]
    return EvalReport.from_distances(keypoints, np.vstack(fold_distances), folds)


def train(dataset: MotionDataset, method: str, arch: Architecture, config: TrainConfig):
    if method == "syda":
        return train_syda(dataset, arch, config)
    if method == "direct":
        return train_direct(dataset, arch, config)
    raise ValidationError(f"unknown method {method!r} (expected syda or direct)")


def cross_validate(
    dataset: MotionDataset,
    method: str,
    arch: Architecture,
    config: TrainConfig,
    target_agent: AgentModel,
    k: int = 3,
    keypoints=None,
    reverse: bool = False,
) -> EvalReport:
    """k-fold CV of the A->B mapping (or B->A with ``reverse``), errors in the target agent's keypoints.

    A reversed direct model is trained on the swapped pairs; a reversed SyDa model
    is the same trained model read backwards.
    """
    expected = dataset.agent_a if reverse else dataset.agent_b
    if target_agent.name != expected:
        raise ValidationError(f"target agent {target_agent.name!r} does not match dataset side {expected!r}")
    fold_d = []
    names = eval_keypoints(target_agent, keypoints)
    for held in cv_folds(len(dataset), k, config.seed):
        train_idx = np.setdiff1d(np.arange(len(dataset)), held)
        train_ds = dataset.subset(train_idx)
        test_ds = dataset.subset(held)
        if reverse and method == "direct":
            model, _ = train_direct(train_ds.swapped(), arch, config)
            pred = map_forward(model, test_ds.features_b)
        else:
            model, _ = train(train_ds, method, arch, config)
            pred = map_backward(model, test_ds.features_b) if reverse else map_forward(model, test_ds.features_a)
        truth = test_ds.features_a if reverse else test_ds.features_b
        fold_d.append(keypoint_distances(target_agent, pred, truth, names)[1])
    return aggregate_folds(names, fold_d)


# -- persistence --------------------------------------------------------------
def model_to_dict(model: SydaModel | DirectModel, provenance: dict | None = None) -> dict:
    out = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "provenance": provenance or {},
        "kind": model.kind,
        "agent_a": model.agent_a,
        "agent_b": model.agent_b,
        "norm_a": model.norm_a.to_dict(),
        "norm_b": model.norm_b.to_dict(),
        "networks": {k: v.to_dict() for k, v in model.networks().items()},
    }
    if isinstance(model, SydaModel):
        out["latent_width"] = model.latent_width
    return out


def model_from_dict(d: dict) -> SydaModel | DirectModel:
    if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
        raise ValidationError("not a sydachain model file (format/version mismatch)")
    nets = {k: NetworkParams.from_dict(v) for k, v in d["networks"].items()}
    norm_a, norm_b = Standardizer.from_dict(d["norm_a"]), Standardizer.from_dict(d["norm_b"])
    if d["kind"] == "syda":
        return SydaModel(nets["encoder_a"], nets["decoder_a"], nets["encoder_b"], nets["decoder_b"],
                         int(d["latent_width"]), norm_a, norm_b, d["agent_a"], d["agent_b"])
    if d["kind"] == "direct":
        return DirectModel(nets["net"], norm_a, norm_b, d["agent_a"], d["agent_b"])
    raise ValidationError(f"unknown model kind {d['kind']!r}")


def save_model(model, path, provenance: dict | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, provenance), indent=1) + "\n")


def load_model(path) -> SydaModel | DirectModel:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"model file not found: {path}")
    try:
        return model_from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed model file ({exc})") from exc
