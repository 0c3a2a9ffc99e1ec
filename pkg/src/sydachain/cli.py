"""Command-line pipeline: datasets, training, evaluation, transferability and chain planning.

Every output starts with a provenance header (tool version, command line, seeds,
input digests) and contains nothing time- or host-dependent, so re-running a
command with the same flags rewrites byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shlex
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from sydachain import ValidationError, __version__
from sydachain import experiment as ex
from sydachain.datagen import (
    CorrespondenceMap,
    MotionDataset,
    add_sensor_noise,
    export_dataset,
    generate_paired_dataset,
    import_dataset,
)
from sydachain.fixtures import three_agents
from sydachain.kinematics import AgentModel
from sydachain.neuralnet import TrainConfig
from sydachain.syda import (
    Architecture,
    DirectModel,
    EvalReport,
    MappingStage,
    aggregate_folds,
    avg_distance_error,
    chain_map,
    cross_validate,
    eval_keypoints,
    load_model,
    save_model,
    train,
)
from sydachain.transferability import (
    Candidate,
    FleetAgent,
    FleetGraph,
    TransferabilityReport,
    pair_reports,
    plan_chain,
)

FIXTURE_PREFIX = "fixture:"


class Provenance:
    """Header lines shared by every output of one invocation."""

    def __init__(self, argv: list[str], seeds):
        self.argv = argv
        self.seeds = list(seeds)
        self.inputs: list[tuple[str, str]] = []

    def add_input(self, label: str, data: bytes) -> None:
        self.inputs.append((label, hashlib.sha256(data).hexdigest()))

    def add_file(self, path) -> None:
        self.add_input(str(path), Path(path).read_bytes())

    def lines(self) -> list[str]:
        out = [f"sydachain {__version__}", "command: sydachain " + shlex.join(self.argv),
               "seeds: " + " ".join(map(str, self.seeds))]
        out += [f"input: {label} sha256={digest}" for label, digest in self.inputs]
        return out

    def as_dict(self) -> dict:
        return {"tool": f"sydachain {__version__}", "command": self.argv, "seeds": self.seeds,
                "inputs": [{"path": p, "sha256": d} for p, d in self.inputs]}

    def header(self) -> str:
        return "".join(f"# {line}\n" for line in self.lines())


def write_text(out_dir: Path, name: str, prov: Provenance, body: str) -> Path:
    path = out_dir / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(prov.header() + body)
    return path


# -- input resolution ---------------------------------------------------------
def fixture_catalog() -> dict[str, AgentModel]:
    return {a.name: a for a in three_agents()}


def load_agent(ref: str, prov: Provenance) -> AgentModel:
    if ref.startswith(FIXTURE_PREFIX):
        name = ref[len(FIXTURE_PREFIX):]
        catalog = fixture_catalog()
        if name not in catalog:
            raise ValidationError(f"unknown fixture agent {name!r}; choose from {sorted(catalog)}")
        agent = catalog[name]
        prov.add_input(ref, json.dumps(agent.to_dict(), sort_keys=True).encode())
        return agent
    path = Path(ref)
    if not path.is_file():
        raise ValidationError(f"agent spec not found: {path}")
    prov.add_file(path)
    return AgentModel.load(path)


def agent_registry(refs, prov: Provenance) -> dict[str, AgentModel]:
    agents = [load_agent(r, prov) for r in refs or ()]
    return {a.name: a for a in agents}


def need_agent(registry: dict[str, AgentModel], name: str) -> AgentModel:
    if name not in registry:
        raise ValidationError(f"no agent spec named {name!r} was given (pass it with --agents)")
    return registry[name]


def read_dataset(path: str, prov: Provenance, agent_a=None, agent_b=None) -> MotionDataset:
    if not Path(path).is_file():
        raise ValidationError(f"dataset not found: {path}")
    prov.add_file(path)
    return import_dataset(path, agent_a, agent_b)


def read_model(path: str, prov: Provenance):
    if not Path(path).is_file():
        raise ValidationError(f"model file not found: {path}")
    prov.add_file(path)
    return load_model(path)


def parse_widths(text: str | None):
    if text in (None, ""):
        return None
    try:
        widths = tuple(int(w) for w in str(text).split(","))
    except ValueError as exc:
        raise ValidationError(f"bad --hidden-widths {text!r}: expected comma-separated integers") from exc
    if any(w < 1 or w > 64 for w in widths):
        raise ValidationError("hidden widths must lie in [1, 64]")
    return widths


def architecture(args) -> Architecture:
    return Architecture(args.latent_width, parse_widths(args.hidden_widths), args.n_hidden)


def train_config(args) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs, seed=args.seed,
                       latent_loss_weight=args.latent_weight)


def orient(models, source: str) -> list[MappingStage]:
    """Stages that carry features from ``source`` through ``models`` in order."""
    stages, current = [], source
    for i, model in enumerate(models, start=1):
        if model.agent_a == current:
            stage = MappingStage(model)
        elif model.agent_b == current and not isinstance(model, DirectModel):
            stage = MappingStage(model, reverse=True)
        else:
            raise ValidationError(
                f"model {i} maps {model.agent_a}->{model.agent_b} and cannot take {current!r} features")
        stages.append(stage)
        current = stage.target
    return stages


def side_of(ds: MotionDataset, agent: str):
    """(features of ``agent``, features of the other side, other agent name)."""
    if ds.agent_a == agent:
        return ds.features_a, ds.features_b, ds.agent_b
    if ds.agent_b == agent:
        return ds.features_b, ds.features_a, ds.agent_a
    raise ValidationError(f"dataset pairs {ds.agent_a}/{ds.agent_b}, not {agent!r}")


def features_csv(x: np.ndarray, prefix: str = "f") -> str:
    lines = [",".join(f"{prefix}{i}" for i in range(x.shape[1]))]
    lines += [",".join(map(repr, row.tolist())) for row in x]
    return "\n".join(lines) + "\n"


def report_rows(scope: str, report: EvalReport) -> list[str]:
    rows = [f"{scope},{k},{m!r},{s!r}" for k, m, s in report.rows()]
    rows += [f"{scope},fold_{i},{f!r}," for i, f in enumerate(report.folds, start=1)]
    return rows


# -- commands -----------------------------------------------------------------
def cmd_gen_data(args, prov: Provenance) -> int:
    leader = load_agent(args.leader, prov)
    follower = load_agent(args.follower, prov)
    if args.correspondence:
        prov.add_file(args.correspondence)
        cmap = CorrespondenceMap.from_dict(json.loads(Path(args.correspondence).read_text()))
    else:
        cmap = CorrespondenceMap.by_name(leader, follower)
    ds = generate_paired_dataset(leader, follower, cmap, args.n, args.seed, args.smoothness)
    if args.noise:
        ds = add_sensor_noise(ds, leader.sensor_noise_sigma, follower.sensor_noise_sigma, args.seed + 1)
    path = args.out_dir / args.out
    path.parent.mkdir(parents=True, exist_ok=True)
    export_dataset(ds, path, prov.lines())
    print(f"wrote {path}: n={len(ds)} mean_residual_m={ds.provenance['mean_residual_m']:.6g} "
          f"max_residual_m={ds.provenance['max_residual_m']:.6g}")
    return 0


def cmd_train(args, prov: Provenance) -> int:
    ds = read_dataset(args.dataset, prov)
    model, losses = train(ds, args.method, architecture(args), train_config(args))
    out = args.out_dir / args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out, prov.as_dict())
    if args.method == "syda":
        rows = ["epoch,l_a,l_b,l_latent,total"]
        rows += [f"{e},{a!r},{b!r},{z!r},{t!r}" for e, (a, b, z, t)
                 in enumerate(zip(losses.l_a, losses.l_b, losses.l_latent, losses.total), start=1)]
    else:
        rows = ["epoch,loss"] + [f"{e},{t!r}" for e, t in enumerate(losses.total, start=1)]
    loss_path = write_text(args.out_dir, Path(args.out).stem + ".loss.csv", prov, "\n".join(rows) + "\n")
    print(f"wrote {out} and {loss_path}: final loss {losses.total[-1]:.6g}")
    return 0


def cmd_eval(args, prov: Provenance) -> int:
    registry = agent_registry(args.agents, prov)
    ds = read_dataset(args.dataset, prov)
    source, target = (ds.agent_b, ds.agent_a) if args.reverse else (ds.agent_a, ds.agent_b)
    keypoints = args.keypoints.split(",") if args.keypoints else None
    rows = ["scope,keypoint,mean_m,std_m"]
    if args.folds:
        if args.model:
            raise ValidationError("--folds trains its own models; do not pass --model")
        target_agent = need_agent(registry, target)
        report = cross_validate(ds, args.method, architecture(args), train_config(args), target_agent,
                                args.folds, keypoints, reverse=args.reverse)
        rows += report_rows(f"{source}->{target}", report)
    else:
        if not args.model:
            raise ValidationError("give --model (one or more, in chain order) or --folds")
        models = [read_model(m, prov) for m in args.model]
        stages = orient(models, source)
        if stages[-1].target != target:
            raise ValidationError(f"models end at {stages[-1].target!r} but the dataset target is {target!r}")
        x, truth, _ = side_of(ds, source)
        final, _ = chain_map(stages, x)
        target_agent = need_agent(registry, target)
        names = eval_keypoints(target_agent, keypoints)
        scope = "->".join([source] + [s.target for s in stages])
        rows += report_rows(scope, avg_distance_error(target_agent, final, truth, names))
        if args.stage_dataset:
            if len(args.stage_dataset) != len(stages):
                raise ValidationError(f"{len(stages)} stages but {len(args.stage_dataset)} --stage-dataset files")
            for i, (stage, path) in enumerate(zip(stages, args.stage_dataset), start=1):
                sds = read_dataset(path, prov)
                sx, struth, other = side_of(sds, stage.source)
                if other != stage.target:
                    raise ValidationError(f"{path} pairs {stage.source} with {other}, stage {i} needs {stage.target}")
                tgt = need_agent(registry, stage.target)
                rep = avg_distance_error(tgt, stage(sx), struth, eval_keypoints(tgt, keypoints))
                rows += report_rows(f"stage{i}:{stage.source}->{stage.target}", rep)
    path = write_text(args.out_dir, args.out, prov, "\n".join(rows) + "\n")
    print(f"wrote {path}")
    return 0


def _map_common(args, prov: Provenance):
    ds = read_dataset(args.dataset, prov)
    models = [read_model(m, prov) for m in args.model]
    source = args.source or (models[0].agent_a if len(models) == 1 else ds.agent_a)
    x, _, _ = side_of(ds, source)
    return orient(models, source), x


def cmd_map(args, prov: Provenance) -> int:
    if len(args.model) != 1:
        raise ValidationError("map takes exactly one --model; use chain-map for several")
    stages, x = _map_common(args, prov)
    path = write_text(args.out_dir, args.out, prov, features_csv(stages[0](x)))
    print(f"wrote {path}: {stages[0].source}->{stages[0].target}, {len(x)} rows")
    return 0


def cmd_chain_map(args, prov: Provenance) -> int:
    stages, x = _map_common(args, prov)
    final, inter = chain_map(stages, x)
    stem = Path(args.out).stem
    for i, feats in enumerate(inter, start=1):
        write_text(args.out_dir, f"{stem}.stage{i}.csv", prov, features_csv(feats))
    path = write_text(args.out_dir, args.out, prov, features_csv(final))
    print(f"wrote {path}: " + "->".join([stages[0].source] + [s.target for s in stages]) + f", {len(x)} rows")
    return 0


def cmd_transfer(args, prov: Provenance) -> int:
    a = load_agent(args.agent_a, prov)
    b = load_agent(args.agent_b, prov)
    fwd, bwd = pair_reports(a, b, args.chain_a, args.chain_b, args.samples, args.cell_size, args.seed,
                            alpha=args.alpha, sigma_best=args.sigma_best)
    if args.error_ab is not None:
        fwd = _with_error(fwd, args.error_ab)
    if args.error_ba is not None:
        bwd = _with_error(bwd, args.error_ba)
    body = ",".join(TransferabilityReport.CSV_COLUMNS) + "\n" + fwd.csv_row() + "\n" + bwd.csv_row() + "\n"
    path = write_text(args.out_dir, args.out, prov, body)
    print(f"wrote {path}: T({a.name}->{b.name})={fwd.transferability:.6g} T({b.name}->{a.name})={bwd.transferability:.6g}")
    return 0


def _with_error(report: TransferabilityReport, error: float) -> TransferabilityReport:
    return replace(report, error_m=float(error))


def parse_candidate(text: str) -> Candidate:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"bad --candidate {text!r}: expected anchor:T_to_new:T_from_new")
    try:
        return Candidate(parts[0], float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ValidationError(f"bad --candidate {text!r}: {exc}") from exc


def cmd_plan(args, prov: Provenance) -> int:
    if not Path(args.fleet).is_file():
        raise ValidationError(f"fleet file not found: {args.fleet}")
    prov.add_file(args.fleet)
    fleet = FleetGraph.load(args.fleet)
    if not args.candidate:
        raise ValidationError("give at least one --candidate anchor:T_to_new:T_from_new")
    new = FleetAgent(args.new_agent, args.kind, "", args.sigma)
    plan = plan_chain(fleet, new, [parse_candidate(c) for c in args.candidate], args.objective, args.query,
                      toward_new=args.direction == "toward")
    all_pairs, minimal = plan.model_counts
    lines = [
        f"new_agent: {plan.new_agent} ({args.kind})",
        f"objective: {plan.objective}",
        f"chosen: {plan.chosen.anchor} score={plan.best_score!r}",
        "",
        "anchor,score",
        *(f"{a},{s!r}" for a, s in sorted(plan.scores.items())),
        "",
        "anchor,counterpart,product,hops,long_path,path",
        *(f"{r.anchor},{r.counterpart},{r.product!r},{r.hops},{int(r.long_path)},{'>'.join(r.path)}"
          for r in sorted(plan.audit, key=lambda r: (r.anchor, r.counterpart))),
        "",
        f"models_all_pairs (n_h*n_r): {all_pairs}",
        f"models_minimal (n_h+n_r-1): {minimal}",
    ]
    text = "\n".join(lines) + "\n"
    path = write_text(args.out_dir, args.out, prov, text)
    sys.stdout.write(text)
    print(f"wrote {path}")
    return 0


def cmd_reproduce(args, prov: Provenance) -> int:
    cfg = ex.ExperimentConfig(n_per_pair=args.n, arch=architecture(args), train=train_config(args),
                              workspace_samples=args.samples)
    agents = ex.fixture_agents()
    for agent in agents.values():
        path = args.out_dir / "agents" / f"{agent.name}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        agent.save(path)
    seeds = list(range(args.seed, args.seed + args.seeds))
    results = {"syda": [], "direct": []}
    for s in seeds:
        datasets = ex.make_datasets(agents, s, cfg.n_per_pair, cfg.mimic)
        for method in results:
            results[method].append(ex.run_seed(s, method, cfg, agents, datasets))
        print(f"seed {s} done", flush=True)
    table = ex.transferability_table(agents, cfg)
    name = {role: a.name for role, a in agents.items()}

    rows = [",".join(TransferabilityReport.CSV_COLUMNS) + ",E_std_m"]
    for (u, v), rep in sorted(table.items()):
        d = np.vstack([r.pair_distances[u, v] for r in results["syda"]])
        rep = _with_error(rep, float(d.mean()))
        rows.append(rep.csv_row() + f",{float(d.std())!r}")
    write_text(args.out_dir, "table2_pairs.csv", prov, "\n".join(rows) + "\n")

    scores = ex.chain_scores(table)
    files = {("large", "small", "robot"): "table3_chain_large_small_robot.csv",
             ("small", "large", "robot"): "table4_chain_small_large_robot.csv"}
    summary = ["chain,T,syda_mean_m,syda_std_m,direct_mean_m,direct_std_m"]
    for order, fname in files.items():
        per = {m: aggregate_folds(results[m][0].keypoints, [r.chain_distances[order] for r in rs])
               for m, rs in results.items()}
        body = ["keypoint,syda_mean_m,syda_std_m,direct_mean_m,direct_std_m"]
        for (k, sm, ss), (_, dm, dsd) in zip(per["syda"].rows(), per["direct"].rows()):
            body.append(f"{k},{sm!r},{ss!r},{dm!r},{dsd!r}")
        write_text(args.out_dir, fname, prov, "\n".join(body) + "\n")
        label = "-".join(name[r] for r in order)
        summary.append(f"{label},{scores[order]!r},{per['syda'].total!r},{per['syda'].total_std!r},"
                       f"{per['direct'].total!r},{per['direct'].total_std!r}")
    write_text(args.out_dir, "table5_chain_ranking.csv", prov, "\n".join(summary) + "\n")

    scatter = ["kind,label,T,syda_E_m,direct_E_m"]
    for (u, v), rep in sorted(table.items()):
        e = {m: np.mean([r.pair_error(u, v) for r in rs]) for m, rs in results.items()}
        scatter.append(f"pair,{name[u]}-{name[v]},{rep.transferability!r},{e['syda']!r},{e['direct']!r}")
    for order in ex.CHAIN_ORDERS:
        e = {m: np.mean([r.chain_error(order) for r in rs]) for m, rs in results.items()}
        scatter.append(f"chain,{'-'.join(name[r] for r in order)},{scores[order]!r},{e['syda']!r},{e['direct']!r}")
    write_text(args.out_dir, "t_vs_e.csv", prov, "\n".join(scatter) + "\n")
    print(f"wrote tables to {args.out_dir}")
    return 0


# -- argument parsing ---------------------------------------------------------
def _training_flags(p: argparse.ArgumentParser, epochs: int = 200, lr: float = 1e-3, batch: int = 32,
                    latent: int | None = None, hidden: str | None = None) -> None:
    p.add_argument("--latent-width", type=int, default=latent)
    p.add_argument("--hidden-widths", default=hidden, help="comma-separated encoder hidden widths, e.g. 32,16")
    p.add_argument("--n-hidden", type=int, default=2)
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--batch-size", type=int, default=batch)
    p.add_argument("--latent-weight", type=float, default=1.0, help="weight of the latent-matching loss")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", type=Path, default=Path("."))
    common.add_argument("--config", help="JSON file of flag values; command-line flags take precedence")

    parser = argparse.ArgumentParser(prog="sydachain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sydachain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("gen-data", cmd_gen_data, "generate a paired mimicry dataset")
    p.add_argument("--leader", required=True, help="agent spec JSON or fixture:<name>")
    p.add_argument("--follower", required=True)
    p.add_argument("--correspondence", help="JSON keypoint correspondence (default: same names, length scale)")
    p.add_argument("--n", type=int, default=700)
    p.add_argument("--smoothness", type=int)
    p.add_argument("--noise", action="store_true", help="add each agent's capture noise")
    p.add_argument("--out", default="dataset.txt")

    p = add("train", cmd_train, "train a SyDa or direct mapping model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--method", choices=("syda", "direct"), default="syda")
    _training_flags(p)
    p.add_argument("--out", default="model.json")

    p = add("eval", cmd_eval, "average distance errors of a model, a chain, or k-fold CV")
    p.add_argument("--dataset", required=True)
    p.add_argument("--agents", nargs="+", required=True, help="agent specs needed to decode features")
    p.add_argument("--model", nargs="+", help="one model, or several in chain order")
    p.add_argument("--stage-dataset", nargs="+", help="per-stage datasets for intermediate errors")
    p.add_argument("--folds", type=int, help="k-fold CV instead of a trained model")
    p.add_argument("--method", choices=("syda", "direct"), default="syda")
    p.add_argument("--reverse", action="store_true", help="map the dataset's B side to its A side")
    p.add_argument("--keypoints", help="comma-separated keypoints (default elbows and wrists)")
    _training_flags(p)
    p.add_argument("--out", default="eval.csv")

    for name, func, help_ in (("map", cmd_map, "map features through one model"),
                              ("chain-map", cmd_chain_map, "map features through models in chain order")):
        p = add(name, func, help_)
        p.add_argument("--model", nargs="+", required=True)
        p.add_argument("--dataset", required=True, help="dataset whose source-side features are mapped")
        p.add_argument("--source", help="source agent name (default: first model's A side)")
        p.add_argument("--out", default=f"{name}.csv")

    p = add("transfer", cmd_transfer, "transferability in both directions")
    p.add_argument("--agent-a", required=True)
    p.add_argument("--agent-b", required=True)
    p.add_argument("--chain-a", default="right_arm")
    p.add_argument("--chain-b", default="right_arm")
    p.add_argument("--samples", type=int, default=50_000)
    p.add_argument("--cell-size", type=float)
    p.add_argument("--alpha", type=float, help="fixed noise coefficient (overrides the sigma rule)")
    p.add_argument("--sigma-best", type=float, help="lowest capture noise in the wider system")
    p.add_argument("--error-ab", type=float, help="measured A->B error to list beside T")
    p.add_argument("--error-ba", type=float)
    p.add_argument("--out", default="transfer.csv")

    p = add("plan", cmd_plan, "choose where a new agent joins the fleet")
    p.add_argument("--fleet", required=True)
    p.add_argument("--new-agent", required=True)
    p.add_argument("--kind", choices=("human", "robot"), required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--candidate", action="append", help="anchor:T_to_new:T_from_new (repeatable)")
    p.add_argument("--objective", choices=("max_min", "per_query"), default="max_min")
    p.add_argument("--query", help="counterpart for the per_query objective")
    p.add_argument("--direction", choices=("toward", "from"), default="toward",
                   help="score chains into the new agent (toward) or out of it (from)")
    p.add_argument("--out", default="plan.txt")

    p = add("reproduce", cmd_reproduce, "run the three-agent experiment and write the result tables")
    p.add_argument("--seeds", type=int, default=5, help="number of consecutive seeds starting at --seed")
    p.add_argument("--n", type=int, default=700, help="samples per pair")
    p.add_argument("--samples", type=int, default=50_000, help="workspace samples per agent")
    _training_flags(p, epochs=300, lr=3e-3, batch=64, latent=5, hidden="32,16")
    return parser, subs


def parse(argv: list[str]) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        try:
            values = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(values, dict):
            raise ValidationError(f"{path}: expected a JSON object of flag values")
        p = subs[args.command]
        known = {a.dest for a in p._actions}
        values = {k.replace("-", "_"): v for k, v in values.items()}
        unknown = sorted(set(values) - known - {"config"})
        if unknown:
            raise ValidationError(f"{path}: unknown settings for {args.command}: {', '.join(unknown)}")
        for action in p._actions:
            if action.dest in values and action.type is not None and values[action.dest] is not None:
                v = values[action.dest]
                values[action.dest] = [action.type(x) for x in v] if isinstance(v, list) else action.type(v)
        p.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        seeds = range(args.seed, args.seed + args.seeds) if args.command == "reproduce" else [args.seed]
        prov = Provenance(argv, seeds)
        if args.config:
            prov.add_file(args.config)
        return args.func(args, prov)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
