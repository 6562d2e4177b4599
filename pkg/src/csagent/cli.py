"""Command-line entry point: ``csagent generate | run | replay | report | oracle-script``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .agent import DialogueTranscript, solver_state
from .backend import BackendConfig, LiveBackend, Rule, load_script
from .decider import DEPTH_PREFERENCES
from .errors import ConfigInvalid, CSAgentError
from .evaluation import (
    EvalConfig,
    instance_rng,
    read_records,
    reextract,
    rounds_sweep,
    run_baseline,
    run_cs_agent,
    run_self_consistency,
    score_transcript,
    write_report,
    write_results_csv,
)
from .extraction import format_community
from .generators import DatasetSpec, generate_dataset
from .graph import DatasetKind, Difficulty, MetricKind, read_dataset
from .prompting import Method, build_prompt, metric_definition, verbalize_graph

log = logging.getLogger("csagent")

METHODS = ("zero-shot", "few-shot", "0-cot", "cs-agent", "sc")
BACKENDS = ("live", "scripted")
ENV_PREFIX = "CS_AGENT_"


@dataclass
class RunConfig:
    dataset: str | None = None
    out: str = "runs/latest"
    method: str = "zero-shot"
    agent_method: str = "zero-shot"
    rounds: int = 3
    sc_k: int = 3
    parallelism: int = 1
    seed: int | None = None
    backend: str = "live"
    script: str | None = None
    depth_preference: str = "later"
    log_wire: bool = False
    endpoint: str = BackendConfig.endpoint
    model: str = BackendConfig.model
    api_key_env: str = BackendConfig.api_key_env
    timeout_s: float = BackendConfig.timeout_s
    max_attempts: int = BackendConfig.max_attempts
    backoff_base_s: float = BackendConfig.backoff_base_s
    temperature: float = 0.5
    sc_temperature: float = 0.8
    requests_per_second: float | None = None

    def backend_config(self) -> BackendConfig:
        return BackendConfig(
            endpoint=self.endpoint, model=self.model, api_key_env=self.api_key_env,
            timeout_s=self.timeout_s, max_attempts=self.max_attempts,
            backoff_base_s=self.backoff_base_s, temperature=self.temperature,
            sc_temperature=self.sc_temperature, parallelism=self.parallelism,
            requests_per_second=self.requests_per_second,
        )

    def eval_config(self) -> EvalConfig:
        return EvalConfig(
            temperature=self.temperature, sc_temperature=self.sc_temperature,
            model_id=self.model if self.backend == "live" else "scripted",
            rounds=self.rounds, sc_k=self.sc_k, parallelism=self.parallelism,
            seed=self.seed, depth_preference=self.depth_preference,
        )


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, value):
    kind = _TYPES[name]
    if value is None:
        if "None" in kind:
            return None
        raise ConfigInvalid(name, "must not be null")
    try:
        if kind.startswith("int"):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind.startswith("float"):
            return float(value)
        if kind == "bool":
            if isinstance(value, str):
                low = value.strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no"):
                    raise ValueError
                return low in ("1", "true", "yes")
            return bool(value)
    except (TypeError, ValueError):
        raise ConfigInvalid(name, f"cannot interpret {value!r} as {kind.split(' ')[0]}") from None
    return str(value)


def _flatten(doc: dict) -> dict:
    flat = {}
    for key, value in doc.items():
        if isinstance(value, dict) and key in ("backend_config", "paths", "llm"):
            flat.update(value)
        elif key == "backend" and isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value
    return flat


def load_config_file(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigInvalid("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("config", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigInvalid("config", "top level must be an object")
    return _flatten(doc)


def resolve_config(flags: dict | None = None, env=None, config_path=None) -> RunConfig:
    """Merge defaults < config file < environment < flags, then validate."""
    env = os.environ if env is None else env
    merged = asdict(RunConfig())
    if config_path:
        doc = load_config_file(config_path)
        unknown = sorted(set(doc) - set(_TYPES))
        if unknown:
            raise ConfigInvalid(unknown[0], "unknown config field")
        merged.update({k: _coerce(k, v) for k, v in doc.items()})
    for name in _TYPES:
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None and raw != "":
            merged[name] = _coerce(name, raw)
    for name, value in (flags or {}).items():
        if value is not None:
            merged[name] = _coerce(name, value)
    cfg = RunConfig(**merged)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig):
    if cfg.method not in METHODS:
        raise ConfigInvalid("method", f"must be one of {', '.join(METHODS)}")
    if cfg.agent_method not in METHODS[:3]:
        raise ConfigInvalid("agent_method", "must be zero-shot, few-shot or 0-cot")
    if cfg.backend not in BACKENDS:
        raise ConfigInvalid("backend", f"must be one of {', '.join(BACKENDS)}")
    if cfg.backend == "scripted" and not cfg.script:
        raise ConfigInvalid("script", "required with the scripted backend")
    if cfg.rounds < 1:
        raise ConfigInvalid("rounds", "must be >= 1")
    if cfg.sc_k < 1:
        raise ConfigInvalid("sc_k", "must be >= 1")
    if cfg.parallelism < 1:
        raise ConfigInvalid("parallelism", "must be >= 1")
    if cfg.temperature < 0 or cfg.sc_temperature < 0:
        raise ConfigInvalid("temperature", "must be >= 0")
    if cfg.timeout_s <= 0:
        raise ConfigInvalid("timeout_s", "must be positive")
    if cfg.max_attempts < 1:
        raise ConfigInvalid("max_attempts", "must be >= 1")
    if cfg.depth_preference not in DEPTH_PREFERENCES:
        raise ConfigInvalid("depth_preference", f"must be one of {', '.join(DEPTH_PREFERENCES)}")
    if not cfg.dataset:
        raise ConfigInvalid("dataset", "a dataset file is required")
    if cfg.requests_per_second is not None and cfg.requests_per_second <= 0:
        raise ConfigInvalid("requests_per_second", "must be positive")


def planned_calls(cfg: RunConfig, n_instances: int) -> int:
    per = {"cs-agent": 2 * cfg.rounds, "sc": cfg.sc_k}.get(cfg.method, 1)
    return per * n_instances


# -- generate ----------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.spec:
        try:
            doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid("spec", str(exc)) from None
        if args.seed is not None:
            doc["base_seed"] = args.seed
        spec = DatasetSpec.from_dict(doc)
    else:
        if not args.dataset:
            raise ConfigInvalid("dataset", "--dataset or --spec is required")
        tiers = list(Difficulty) if args.tier == "all" else [Difficulty(args.tier.capitalize())]
        metrics = [MetricKind(m) for m in args.metrics] if args.metrics else list(MetricKind)
        spec = DatasetSpec(
            dataset=DatasetKind(args.dataset.upper()),
            counts={t: args.count for t in tiers},
            metrics=metrics,
            base_seed=args.seed if args.seed is not None else 0,
        )
    if args.parallelism:
        spec.parallelism = args.parallelism
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest_path = Path(args.manifest) if args.manifest else out.with_suffix(".manifest.json")
    manifest = generate_dataset(spec, out, manifest_path)
    print(f"wrote {manifest['total']} instances to {out} (manifest {manifest_path})")
    return 0


# -- run ---------------------------------------------------------------------------


def _make_backend(cfg: RunConfig):
    if cfg.backend == "scripted":
        try:
            backend = load_script(cfg.script)
        except FileNotFoundError:
            raise ConfigInvalid("script", f"file not found: {cfg.script}") from None
        if backend.responses and cfg.parallelism > 1:
            log.warning("ordered script: forcing parallelism to 1")
            cfg.parallelism = 1
        return backend
    wire = Path(cfg.out) / "wire.jsonl" if cfg.log_wire else None
    return LiveBackend(cfg.backend_config(), wire_log=wire)


def _dump_prompts(cfg: RunConfig, instances) -> int:
    root = Path(cfg.out) / "prompts"
    root.mkdir(parents=True, exist_ok=True)
    evc = cfg.eval_config()
    for inst in instances:
        if cfg.method == "cs-agent":
            state = solver_state(inst, Method.parse(cfg.agent_method), instance_rng(evc, inst))
            system, user = state.role_prompt, state.task_instruction
        else:
            method = Method.ZERO_SHOT if cfg.method == "sc" else Method.parse(cfg.method)
            bundle = build_prompt(inst, method, rng=None if cfg.method == "sc" else instance_rng(evc, inst))
            system, user = bundle.system_role, bundle.user_prompt
        (root / f"{inst.instance_id}.txt").write_text(
            f"[system]\n{system}\n\n[user]\n{user}\n", encoding="utf-8"
        )
    print(f"wrote {len(instances)} prompts to {root}")
    return 0


def _config_snapshot(cfg: RunConfig) -> dict:
    return asdict(cfg)  # holds the key's variable name, never the key


def cmd_run(args) -> int:
    if args.replay:
        return _replay(args.replay, args.out or "runs/replay", args.depth_preference or "later")
    flags = {
        "dataset": args.dataset, "out": args.out, "method": args.method, "rounds": args.rounds,
        "sc_k": args.sc_k, "parallelism": args.parallelism, "seed": args.seed,
        "backend": args.backend, "script": args.script, "depth_preference": args.depth_preference,
        "agent_method": args.agent_method, "log_wire": True if args.log_wire else None,
    }
    cfg = resolve_config(flags, config_path=args.config)
    try:
        instances = read_dataset(cfg.dataset)
    except FileNotFoundError:
        raise ConfigInvalid("dataset", f"file not found: {cfg.dataset}") from None
    if args.dry_run:
        print(json.dumps({"config": _config_snapshot(cfg), "instances": len(instances),
                          "planned_calls": planned_calls(cfg, len(instances))}, indent=2))
        return 0
    if args.dump_prompts:
        return _dump_prompts(cfg, instances)
    backend = _make_backend(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_config.json").write_text(json.dumps(_config_snapshot(cfg), indent=2) + "\n", encoding="utf-8")
    evc = cfg.eval_config()
    if args.sweep:
        r_values = [int(x) for x in args.sweep.split(",") if x.strip()]
        rows = rounds_sweep(instances, backend, r_values, evc, Method.parse(cfg.agent_method))
        with open(out / "sweep.csv", "w", encoding="utf-8") as fh:
            fh.write("r,mean_f1,mean_tokens,n_instances\n")
            for row in rows:
                fh.write(f"{row['r']},{row['mean_f1']:.1f},{row['mean_tokens']:.1f},{row['n_instances']}\n")
        print(f"wrote rounds sweep to {out / 'sweep.csv'}")
        return 0
    if cfg.method == "cs-agent":
        records = run_cs_agent(instances, backend, evc, out, Method.parse(cfg.agent_method))
    elif cfg.method == "sc":
        records = run_self_consistency(instances, backend, evc, out)
    else:
        records = run_baseline(instances, Method.parse(cfg.method), backend, evc, out)
    aborted = [r.instance_id for r in records if r.aborted]
    mean = 100 * sum(r.f1 for r in records) / max(1, len(records))
    print(f"{len(records)}/{len(instances)} instances, mean F1 {mean:.1f}, aborted {len(aborted)}")
    return 1 if aborted else 0


# -- replay / report ------------------------------------------------------------------


def _replay(transcript_dir, out_dir, depth_preference) -> int:
    paths = sorted(Path(transcript_dir).rglob("*.json"))
    if not paths:
        raise ConfigInvalid("replay", f"no transcripts under {transcript_dir}")
    records = []
    for path in paths:
        transcript = DialogueTranscript.from_json(path.read_text(encoding="utf-8"))
        records.append(score_transcript(reextract(transcript), depth_preference))
    records.sort(key=lambda r: (r.method, r.instance_id))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.jsonl").write_text("".join(r.to_json() + "\n" for r in records), encoding="utf-8")
    write_results_csv(records, out / "results.csv")
    print(f"replayed {len(records)} transcripts into {out}")
    return 1 if any(r.aborted for r in records) else 0


def cmd_replay(args) -> int:
    return _replay(args.transcripts, args.out, args.depth_preference)


def _records_from(paths):
    records = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            p = p / "records.jsonl"
        if not p.exists():
            raise ConfigInvalid("records", f"file not found: {p}")
        records.extend(read_records(p))
    return records


def cmd_report(args) -> int:
    records = _records_from(args.records)
    rows = write_report(records, args.out)
    print(f"wrote {len(rows)} report rows to {Path(args.out) / 'report.csv'}")
    return 0


def oracle_rules(instances, score: float = 5.0) -> list[Rule]:
    """Rules that answer every instance with its ground truth.

    The Validator rule comes first: its requests also contain the graph.
    """
    rules = [Rule(r"^Round \d+: (review the candidate|the Solver did not return)",
                  f"The community satisfies the metric.\nScore: {score:g}")]
    for inst in instances:
        pattern = (re.escape(metric_definition(inst.metric, inst.k)) + r"[\s\S]*"
                   + re.escape(verbalize_graph(inst.graph, inst.query)))
        rules.append(Rule(pattern, format_community(inst.ground_truth), scope="all"))
    return rules


def cmd_oracle_script(args) -> int:
    rules = oracle_rules(read_dataset(args.dataset), args.score)
    doc = {"rules": [asdict(r) for r in rules]}
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {len(rules)} rules to {args.out}")
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csagent", description="LLM community search experiments")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a dataset and its manifest")
    g.add_argument("--dataset", choices=["psg", "lfr", "PSG", "LFR"])
    g.add_argument("--tier", default="all", choices=["easy", "medium", "hard", "all"])
    g.add_argument("--count", type=int, default=10, help="instances per tier and metric")
    g.add_argument("--metrics", nargs="+", choices=[m.value for m in MetricKind])
    g.add_argument("--seed", type=int)
    g.add_argument("--spec", help="dataset spec JSON (overrides --dataset/--tier/--count)")
    g.add_argument("--out", required=True, help="output dataset file (JSON lines)")
    g.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    g.add_argument("--parallelism", type=int)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run a method over a dataset")
    r.add_argument("--config")
    r.add_argument("--dataset")
    r.add_argument("--method", choices=METHODS)
    r.add_argument("--agent-method", choices=METHODS[:3], help="Solver prompt style for cs-agent")
    r.add_argument("--rounds", type=int)
    r.add_argument("--sc-k", type=int)
    r.add_argument("--backend", choices=BACKENDS)
    r.add_argument("--script")
    r.add_argument("--parallelism", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--depth-preference", choices=DEPTH_PREFERENCES)
    r.add_argument("--dry-run", action="store_true")
    r.add_argument("--dump-prompts", action="store_true")
    r.add_argument("--log-wire", action="store_true")
    r.add_argument("--replay", metavar="TRANSCRIPT_DIR")
    r.add_argument("--sweep", metavar="R_VALUES", help="comma-separated rounds for a sweep")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-score stored transcripts without model calls")
    p.add_argument("transcripts")
    p.add_argument("--out", default="runs/replay")
    p.add_argument("--depth-preference", default="later", choices=DEPTH_PREFERENCES)
    p.set_defaults(func=cmd_replay)

    s = sub.add_parser("report", help="aggregate records into report CSV and plot data")
    s.add_argument("records", nargs="+", help="records.jsonl files or run directories")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)

    o = sub.add_parser("oracle-script", help="write a scripted backend that answers with ground truth")
    o.add_argument("--dataset", required=True)
    o.add_argument("--out", required=True)
    o.add_argument("--score", type=float, default=5.0)
    o.set_defaults(func=cmd_oracle_script)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"error: invalid config field {exc.field!r}: {exc.reason}", file=sys.stderr)
        return 2
    except CSAgentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("interrupted; completed records were flushed", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
