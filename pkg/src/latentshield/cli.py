"""Command-line entry point: ``latentshield <command> [flags]``.

Configuration is a JSON file (``--config``) whose values are overridden by
flags. Exit status: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import checkpoint
from .attacks import AttackHyper, TargetHyper, train_target
from .data import DATA_ENV, LabeledDataset, dataset_paths, load_split
from .experiments import PAPER_EPSILON_GRID, TARGET_STREAM, ExperimentConfig, attack_pool, privacy_experiment
from .numeric import RngStream
from .pipeline import (
    LATENTS,
    MANIFEST,
    RESOLVED_CONFIG,
    VAE_CKPT,
    PipelineConfig,
    StageError,
    load_synthetic,
    run_full_pipeline,
    train_stage,
    verify_manifest,
    verify_post_processing,
)

log = logging.getLogger("latentshield")

COMMANDS = ("train-vae", "generate", "train-target", "attack", "sweep", "verify-mechanism", "report")
SWEEP_COLUMNS = ("epsilon", "attack_kind", "seed", "accuracy", "precision", "recall", "fscore", "auc")
STATUS = "status.json"
EXTRA_SECTIONS = ("target", "attack", "evaluation")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    pipeline: PipelineConfig
    target: TargetHyper
    attack: AttackHyper
    evaluation: dict

    def to_dict(self) -> dict:
        return {**self.pipeline.to_dict(), "target": asdict(self.target), "attack": asdict(self.attack),
                "evaluation": self.evaluation}

    def experiment(self) -> ExperimentConfig:
        p = self.pipeline
        ev = self.evaluation
        return ExperimentConfig(vae=p.vae, labeler=p.labeler, utility_target=self.target, attack=self.attack,
                                scaling=p.privacy["scaling"], members=int(ev["members"]),
                                nonmembers=int(ev["nonmembers"]), shadow_size=ev.get("shadow_size"))


def _hyper(cls, d: dict, section: str):
    d = dict(d)
    for short, full in (("lr", "learning_rate"), ("batch", "batch_size")):
        if short in d:
            d[full] = d.pop(short)
    try:
        return cls(**d)
    except TypeError as exc:
        raise UsageError(f"bad [{section}] section: {exc}") from exc


def resolve_config(args) -> RunConfig:
    raw: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    extras = {key: raw.pop(key, {}) for key in EXTRA_SECTIONS}

    if args.seed is not None:
        raw["seed"] = args.seed
    if args.epsilon is not None:
        raw.setdefault("privacy", {})["epsilon"] = args.epsilon
    if args.scaling is not None:
        raw.setdefault("privacy", {})["scaling"] = args.scaling
    if args.k is not None:
        raw.setdefault("vae", {})["k"] = args.k
    if args.subset is not None:
        raw["subset"] = args.subset
    if args.out is not None:
        raw["out_dir"] = args.out
    if args.dataset is not None or "dataset" not in raw:
        name = args.dataset or "mnist"
        try:
            raw["dataset"] = {key: str(p) for key, p in dataset_paths(name).items()}
        except FileNotFoundError as exc:
            raise UsageError(f"{exc} (checked ${DATA_ENV})") from exc
        raw.setdefault("name", name)

    try:
        pipeline = PipelineConfig.from_dict(raw)
    except (TypeError, ValueError, KeyError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc

    attack_raw = dict(extras["attack"])
    attack_target = _hyper(TargetHyper, attack_raw.pop("target", {}), "attack.target")
    attack = _hyper(AttackHyper, attack_raw, "attack")
    attack.target = attack_target
    evaluation = {"members": 2000, "nonmembers": 2000, "shadow_size": None} | dict(extras["evaluation"])
    unknown = set(evaluation) - {"members", "nonmembers", "shadow_size"}
    if unknown:
        raise UsageError(f"unknown [evaluation] keys: {sorted(unknown)}")
    return RunConfig(pipeline, _hyper(TargetHyper, extras["target"], "target"), attack, evaluation)


def _begin(out: Path, command: str, cfg: RunConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / STATUS).write_text(json.dumps({"command": command, "status": "incomplete"}) + "\n")
    (out / RESOLVED_CONFIG).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def _finish(out: Path, command: str) -> None:
    (out / STATUS).write_text(json.dumps({"command": command, "status": "complete"}) + "\n")


def _fail(out: Path, command: str, stage: str, exc: BaseException) -> None:
    if out.is_dir():
        (out / STATUS).write_text(json.dumps({"command": command, "status": "incomplete", "stage": stage,
                                              "error": str(exc)}) + "\n")


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _load_pool(cfg: PipelineConfig) -> tuple[LabeledDataset, LabeledDataset]:
    return load_split(cfg.dataset, cfg.subset, cfg.name)


# ---------------------------------------------------------------------------
# commands


def cmd_train_vae(args, cfg: RunConfig, out: Path) -> dict:
    train, _ = _load_pool(cfg.pipeline)
    model, history = train_stage(cfg.pipeline, train)
    checkpoint.save_vae(out / VAE_CKPT, model, {"hyper": asdict(cfg.pipeline.vae), "seed": cfg.pipeline.seed,
                                                "holdout_loss": history.holdout_loss})
    summary = {"train_loss": history.train_loss, "holdout_loss": history.holdout_loss}
    (out / "vae-history.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"vae: {len(train)} images, holdout loss {history.holdout_loss[0]:.2f} -> {history.holdout_loss[-1]:.2f}")
    return summary


def cmd_generate(args, cfg: RunConfig, out: Path) -> dict:
    vae = checkpoint.load_vae(args.vae) if args.vae else None
    run_full_pipeline(cfg.pipeline, out, vae_model=vae)
    manifest = json.loads((out / MANIFEST).read_text())
    print(f"generated {manifest['n']} images; eps_eff mean {manifest['effective_epsilon']['mean']}; "
          f"images {manifest['images_digest']} labels {manifest['labels_digest']}")
    return manifest


def cmd_train_target(args, cfg: RunConfig, out: Path) -> dict:
    train, test = _load_pool(cfg.pipeline)
    data = load_synthetic(args.synthetic) if args.synthetic else train
    rng = RngStream(cfg.pipeline.seed).child(TARGET_STREAM)
    target = train_target(data, cfg.target, rng, train.num_classes)
    result = {"train_source": str(args.synthetic or "raw"), "train_accuracy": target.accuracy(data),
              "test_accuracy": target.accuracy(test), "recipe": target.recipe}
    checkpoint.save_classifier(out / "target.bin", target, result, magic=checkpoint.TARGET_MAGIC)
    (out / "target.json").write_text(json.dumps(result, indent=2) + "\n")
    print(f"target trained on {result['train_source']}: train acc {result['train_accuracy']:.4f}, "
          f"test acc {result['test_accuracy']:.4f}")
    return result


def _attack_rows(cfg: RunConfig, seeds, epsilons, kinds) -> list[dict]:
    train, test = _load_pool(cfg.pipeline)
    exp = cfg.experiment()
    pool, nonmember_pool = attack_pool(train, test, exp.nonmembers)
    rows = []
    for seed in seeds:
        rows += privacy_experiment(pool, int(seed), epsilons=epsilons, kinds=kinds, cfg=exp,
                                   nonmember_pool=nonmember_pool)
    return rows


def _kinds(kind: str) -> tuple[str, ...]:
    return ("blackbox", "whitebox") if kind == "both" else (kind,)


def cmd_attack(args, cfg: RunConfig, out: Path) -> dict:
    eps = [] if args.raw_only else [float(cfg.pipeline.privacy["epsilon"])]
    rows = _attack_rows(cfg, [cfg.pipeline.seed], eps, _kinds(args.kind))
    (out / "attack-reports.json").write_text(json.dumps(rows, indent=2) + "\n")
    for r in rows:
        label = "raw" if r["source"] == "raw" else f"ppgf eps={r['epsilon']}"
        print(f"{label:<16} {r['attack_kind']:<9} acc {r['accuracy']:.4f} auc {r['auc']:.4f}")
    return {"rows": rows}


def cmd_sweep(args, cfg: RunConfig, out: Path) -> dict:
    epsilons = _parse_floats(args.epsilons) if args.epsilons else list(PAPER_EPSILON_GRID)
    seeds = [int(s) for s in _parse_floats(args.seeds)] if args.seeds else [cfg.pipeline.seed]
    rows = _attack_rows(cfg, seeds, epsilons, _kinds(args.kind))
    path = out / "sweep.csv"
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for r in rows:
            writer.writerow(r | {"epsilon": "raw" if r["source"] == "raw" else r["epsilon"]})
    print(f"wrote {len(rows)} rows to {path}")
    return {"rows": len(rows)}


def cmd_verify_mechanism(args) -> int:
    from .verify import run_all

    k = 20 if args.k is None else args.k
    eps = 0.5 if args.epsilon is None else args.epsilon
    seed = 0 if args.seed is None else args.seed
    if k < 1 or not (eps > 0 and math.isfinite(eps)):
        raise UsageError("verify-mechanism needs k >= 1 and a finite epsilon > 0")
    log.info("resolved config: %s", json.dumps({"k": k, "epsilon": eps, "seed": seed}))
    checks = run_all(k, eps, seed)
    for c in checks:
        print(c.line())
    passed = sum(c.passed for c in checks)
    print(f"{passed}/{len(checks)} checks passed")
    return 0 if passed == len(checks) else 2


def cmd_report(args) -> int:
    run = Path(args.run)
    if not run.is_dir():
        raise UsageError(f"run directory not found: {run}")
    ok = True
    status = run / STATUS
    if status.exists():
        s = json.loads(status.read_text())
        print(f"command {s.get('command')}: {s.get('status')}" + (f" at stage {s['stage']}" if "stage" in s else ""))
        ok &= s.get("status") == "complete"
    if (run / MANIFEST).exists():
        m = json.loads((run / MANIFEST).read_text())
        if m.get("status") != "complete":
            print(f"manifest incomplete at stage {m.get('stage')}: {m.get('error', '')}")
            ok = False
        else:
            digests = verify_manifest(run)
            print(f"synthetic set: n={m['n']} k={m['k']} eps={m['requested_epsilon']} scaling={m['scaling']} "
                  f"eps_eff mean={m['effective_epsilon']['mean']}")
            print(f"  digests {'match' if digests else 'MISMATCH'}")
            ok &= digests
            if (run / VAE_CKPT).exists() and (run / LATENTS).exists():
                regen = verify_post_processing(run)
                print(f"  regeneration from stored codes {'bit-exact' if regen else 'DIFFERS'}")
                ok &= regen
    if (run / "target.json").exists():
        t = json.loads((run / "target.json").read_text())
        print(f"target ({t['train_source']}): train acc {t['train_accuracy']:.4f} test acc {t['test_accuracy']:.4f}")
    for name in ("attack-reports.json",):
        if (run / name).exists():
            for r in json.loads((run / name).read_text()):
                print(f"  {r['source']:<5} eps={r['epsilon']} {r['attack_kind']:<9} "
                      f"acc {r['accuracy']:.4f} auc {r['auc']:.4f}")
    if (run / "sweep.csv").exists():
        with (run / "sweep.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        print(f"sweep: {len(rows)} rows")
        for r in rows:
            print(f"  eps={r['epsilon']:<5} {r['attack_kind']:<9} seed={r['seed']} auc {float(r['auc']):.4f}")
    return 0 if ok else 2


ARTIFACT_COMMANDS = {
    "train-vae": cmd_train_vae,
    "generate": cmd_generate,
    "train-target": cmd_train_target,
    "attack": cmd_attack,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, artifacts: bool = True) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--k", type=int)
    if artifacts:
        p.add_argument("--config", help="JSON config; flags override its values")
        p.add_argument("--scaling", choices=("none", "3sigma"))
        p.add_argument("--dataset", choices=("mnist", "fashion"),
                       help=f"IDX files under ${DATA_ENV}/<dataset>/")
        p.add_argument("--subset", type=int, metavar="N", help="use the first N training images")
        p.add_argument("--out", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="latentshield", description="Private synthetic data via latent-space noise, "
                                                      "with membership-inference evaluation.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("train-vae", help="train the VAE and save a checkpoint")
    _common(p)
    p = sub.add_parser("generate", help="run the full pipeline and write a synthetic IDX set")
    _common(p)
    p.add_argument("--vae", metavar="PATH", help="reuse a trained VAE checkpoint")
    p = sub.add_parser("train-target", help="train a target classifier on raw or synthetic data")
    _common(p)
    p.add_argument("--synthetic", metavar="DIR", help="output directory of a `generate` run")
    for name, text in (("attack", "membership inference against raw and private targets"),
                       ("sweep", "attack sweep over a list of budgets, written as CSV")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--kind", choices=("blackbox", "whitebox", "both"), default="both")
        if name == "attack":
            p.add_argument("--raw-only", action="store_true", help="skip the private target")
        else:
            p.add_argument("--epsilons", help="comma-separated budgets (default is the standard 12-point grid)")
            p.add_argument("--seeds", help="comma-separated seeds (default: --seed)")
    p = sub.add_parser("verify-mechanism", help="statistical self-checks of the noise mechanism")
    _common(p, artifacts=False)
    p = sub.add_parser("report", help="summarize and verify a run directory")
    p.add_argument("run", metavar="DIR")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(logging.INFO)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    out = None
    stage = "configure"
    try:
        if args.command == "verify-mechanism":
            return cmd_verify_mechanism(args)
        if args.command == "report":
            return cmd_report(args)
        cfg = resolve_config(args)
        out = Path(cfg.pipeline.out_dir)
        log.info("resolved config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
        stage = args.command
        _begin(out, args.command, cfg)
        ARTIFACT_COMMANDS[args.command](args, cfg, out)
        _finish(out, args.command)
        return 0
    except UsageError as exc:
        print(f"{parser.format_usage()}latentshield: error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"latentshield: {args.command} failed in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        if out is not None:
            _fail(out, args.command, exc.stage, exc.cause)
        return 2
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit 2
        print(f"latentshield: {args.command} failed in stage '{stage}': {type(exc).__name__}: {exc}",
              file=sys.stderr)
        if out is not None:
            _fail(out, args.command, stage, exc)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
