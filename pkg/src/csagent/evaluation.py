"""Scoring and experiment orchestration.

Every run produces one transcript per instance; records are always derived
from transcripts by :func:`score_transcript`, so a replay scores exactly like
the original run.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import threading
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .agent import DialogueTranscript, SolverTurn, dialogue_config, run_dialogue
from .backend import ChatRequest
from .decider import decide
from .errors import BackendError, EmptyRecords, EmptyTruth
from .extraction import extract_community, extract_score
from .graph import DatasetKind, Difficulty, MetricKind
from .prompting import Method, build_prompt

log = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "instance_id", "dataset", "metric", "difficulty", "method", "f1", "bias",
    "rounds_used", "prompt_tokens", "completion_tokens", "wall_ms",
)
REPORT_COLUMNS = ("dataset", "metric", "difficulty", "method", "mean_f1", "bias_rate", "n_instances")


def f1(pred, truth) -> float:
    truth = frozenset(truth)
    if not truth:
        raise EmptyTruth("ground truth must be nonempty")
    if not pred:
        return 0.0
    pred = frozenset(pred)
    hit = len(pred & truth)
    if hit == 0:
        return 0.0
    p, r = hit / len(pred), hit / len(truth)
    return 2 * p * r / (p + r)


def majority_vote(candidates, k: int) -> frozenset:
    """Vertices named by at least half of ``k`` candidates (``2c >= k``).

    ``None`` entries are bias-flagged candidates: they cast no votes but still
    count toward ``k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(v for c in candidates if c is not None for v in c)
    return frozenset(v for v, c in counts.items() if 2 * c >= k)


@dataclass
class EvalConfig:
    temperature: float = 0.5
    sc_temperature: float = 0.8
    model_id: str = ""
    rounds: int = 3
    sc_k: int = 3
    parallelism: int = 1
    seed: int | None = None
    depth_preference: str = "later"


@dataclass
class EvalRecord:
    instance_id: str
    dataset: str
    metric: str
    difficulty: str
    method: str
    predicted: list | None  # None: bias flag, or no answer when aborted
    f1: float
    bias: bool
    rounds_used: int
    prompt_tokens: int
    completion_tokens: int
    wall_ms: int = 0
    aborted: bool = False
    error: str | None = None
    round_f1: list = field(default_factory=list)
    round_scores: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "EvalRecord":
        return cls(**obj)


def method_label(kind: str, method=None) -> str:
    if kind == "sc":
        return "SC"
    m = Method.parse(method) if isinstance(method, str) else Method(method)
    return f"CSAgent({m.value})" if kind == "cs-agent" else m.value


def reextract(transcript: DialogueTranscript) -> DialogueTranscript:
    """Re-run community and score extraction over the stored raw replies."""
    n = transcript.config["n"]
    for turn in transcript.solver_turns:
        turn.community = extract_community(turn.raw_text, n)
    for turn in transcript.validator_turns:
        turn.score = extract_score(turn.raw_text)
    return transcript


def score_transcript(transcript: DialogueTranscript, depth_preference: str = "later",
                     wall_ms: int = 0) -> EvalRecord:
    cfg = transcript.config
    truth = frozenset(cfg["ground_truth"])
    turns = transcript.solver_turns
    predicted, bias = None, False
    round_f1, round_scores = [], []
    if transcript.kind == "cs-agent":
        round_f1 = [0.0 if t.community is None else f1(t.community, truth) for t in turns]
        round_scores = [v.effective_score for v in transcript.validator_turns]
    # an aborted run is still scored on the turns it completed
    if turns:
        if transcript.kind == "baseline":
            predicted = turns[0].community
            bias = predicted is None
        elif transcript.kind == "sc":
            candidates = [t.community for t in turns]
            bias = all(c is None for c in candidates)
            if not bias:
                predicted = majority_vote(candidates, cfg["sc_k"])
        else:
            predicted = decide(transcript, depth_preference)
            bias = predicted is None
    return EvalRecord(
        instance_id=transcript.instance_id,
        dataset=cfg["dataset"],
        metric=cfg["metric"],
        difficulty=cfg["difficulty"],
        method=method_label(transcript.kind, cfg["method"]),
        predicted=None if predicted is None else sorted(predicted),
        f1=0.0 if predicted is None else f1(predicted, truth),
        bias=bias,
        rounds_used=len(turns) if transcript.kind == "cs-agent" else (1 if turns else 0),
        prompt_tokens=transcript.prompt_tokens,
        completion_tokens=transcript.completion_tokens,
        wall_ms=wall_ms,
        aborted=transcript.aborted,
        error=transcript.error,
        round_f1=round_f1,
        round_scores=round_scores,
    )


def instance_rng(cfg: EvalConfig, inst):
    if cfg.seed is None:
        return None
    return np.random.default_rng([cfg.seed, inst.seed])


def _single_calls(inst, backend, method, temperature, calls, model_id, rng):
    """``calls`` independent single-shot requests of the same prompt."""
    bundle = build_prompt(inst, method, rng=rng)
    messages = ({"role": "system", "content": bundle.system_role},
                {"role": "user", "content": bundle.user_prompt})
    request = ChatRequest(messages, temperature=temperature, model_id=model_id)
    turns, error = [], None
    try:
        for i in range(calls):
            resp = backend.complete(request)
            turns.append(SolverTurn(
                round=i,
                prompt=bundle.user_prompt,
                raw_text=resp.text,
                community=extract_community(resp.text, inst.graph.n),
                messages=[dict(m) for m in messages],
                prompt_tokens=resp.prompt_tokens,
                completion_tokens=resp.completion_tokens,
            ))
    except BackendError as exc:
        log.error("%s: aborted: %s", inst.instance_id, exc)
        error = f"{type(exc).__name__}: {exc}"
    return turns, error


def baseline_transcript(inst, method, backend, cfg: EvalConfig) -> DialogueTranscript:
    config = dialogue_config(inst, 1, method, cfg.temperature, cfg.model_id)
    turns, error = _single_calls(inst, backend, method, cfg.temperature, 1, cfg.model_id, instance_rng(cfg, inst))
    return DialogueTranscript(inst.instance_id, config, turns, [], error is not None, error, kind="baseline")


def sc_transcript(inst, backend, cfg: EvalConfig) -> DialogueTranscript:
    if cfg.sc_k < 1:
        raise ValueError("sc_k must be >= 1")
    config = dialogue_config(inst, 1, Method.ZERO_SHOT, cfg.sc_temperature, cfg.model_id)
    config["sc_k"] = cfg.sc_k
    turns, error = _single_calls(inst, backend, Method.ZERO_SHOT, cfg.sc_temperature, cfg.sc_k,
                                 cfg.model_id, None)
    return DialogueTranscript(inst.instance_id, config, turns, [], error is not None, error, kind="sc")


def cs_agent_transcript(inst, method, backend, cfg: EvalConfig) -> DialogueTranscript:
    if cfg.rounds < 1:
        raise ValueError("rounds must be >= 1")
    return run_dialogue(inst, backend, cfg.rounds, method, cfg.temperature, cfg.model_id, instance_rng(cfg, inst))


# -- persistence -------------------------------------------------------------------


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _slug(label: str) -> str:
    return label.replace("(", "-").replace(")", "").lower()


def read_records(path) -> list[EvalRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(EvalRecord.from_dict(json.loads(line)))
    return out


class RecordStore:
    """Records and transcripts under one output directory.

    Finished instances are appended to a staging file as they complete, so a
    killed run can resume; :meth:`merge` folds staging into the sorted
    ``records.jsonl`` and rewrites ``results.csv``.
    """

    def __init__(self, out_dir):
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.records_path = self.root / "records.jsonl"
        self.staging_path = self.root / "records.staging.jsonl"
        self._lock = threading.Lock()

    def _all(self) -> dict:
        found = {}
        for path in (self.records_path, self.staging_path):
            if not path.exists():
                continue
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    try:
                        rec = EvalRecord.from_dict(json.loads(line))
                    except (ValueError, TypeError):
                        continue  # torn final line from a kill
                    found.setdefault((rec.method, rec.instance_id), rec)
        return found

    def completed(self, method: str) -> dict:
        return {iid: rec for (m, iid), rec in self._all().items() if m == method}

    def transcript_path(self, method: str, instance_id: str) -> Path:
        return self.root / "transcripts" / _slug(method) / f"{instance_id}.json"

    def add(self, record: EvalRecord, transcript: DialogueTranscript | None):
        with self._lock:
            if transcript is not None:
                path = self.transcript_path(record.method, record.instance_id)
                path.parent.mkdir(parents=True, exist_ok=True)
                _atomic_write(path, transcript.to_json() + "\n")
            with open(self.staging_path, "a+", encoding="utf-8") as fh:
                if fh.tell() > 0:
                    fh.seek(fh.tell() - 1)
                    if fh.read(1) != "\n":
                        fh.write("\n")  # cut off a line torn by a kill
                fh.write(record.to_json() + "\n")

    def merge(self) -> list[EvalRecord]:
        with self._lock:
            records = [self._all()[k] for k in sorted(self._all())]
            _atomic_write(self.records_path, "".join(r.to_json() + "\n" for r in records))
            self.staging_path.unlink(missing_ok=True)
            write_results_csv(records, self.root / "results.csv")
            return records


def write_results_csv(records, path):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for r in records:
        writer.writerow([
            r.instance_id, r.dataset, r.metric, r.difficulty, r.method, f"{r.f1:.6f}",
            int(r.bias), r.rounds_used, r.prompt_tokens, r.completion_tokens, r.wall_ms,
        ])
    _atomic_write(Path(path), buf.getvalue())


# -- runs --------------------------------------------------------------------------


def _fan_out(instances, label: str, make_transcript, cfg: EvalConfig, out_dir=None) -> list[EvalRecord]:
    store = RecordStore(out_dir) if out_dir is not None else None
    results = dict(store.completed(label)) if store else {}
    todo = [inst for inst in instances if inst.instance_id not in results]
    if store and len(todo) < len(instances):
        log.info("%s: resuming, %d of %d already done", label, len(instances) - len(todo), len(instances))

    def work(inst):
        start = time.perf_counter()
        transcript = make_transcript(inst)
        wall = int(round((time.perf_counter() - start) * 1000))
        return score_transcript(transcript, cfg.depth_preference, wall), transcript

    def finish(fut):
        record, transcript = fut.result()
        results[record.instance_id] = record
        if store:
            store.add(record, transcript)

    pool = ThreadPoolExecutor(max_workers=max(1, cfg.parallelism))
    futures = [pool.submit(work, inst) for inst in todo]
    handled = set()
    try:
        for fut in as_completed(futures):
            handled.add(fut)
            finish(fut)
    except KeyboardInterrupt:
        log.warning("interrupted: draining in-flight instances")
        pool.shutdown(wait=True, cancel_futures=True)
        for fut in futures:
            if fut not in handled and fut.done() and not fut.cancelled() and fut.exception() is None:
                finish(fut)
        if store:
            store.merge()
        raise
    finally:
        pool.shutdown(wait=True)
    if store:
        store.merge()
    wanted = {inst.instance_id for inst in instances}
    return [results[iid] for iid in sorted(wanted)]


def run_baseline(instances, method, backend, cfg: EvalConfig | None = None, out_dir=None):
    cfg = cfg or EvalConfig()
    label = method_label("baseline", method)
    return _fan_out(instances, label, lambda inst: baseline_transcript(inst, method, backend, cfg), cfg, out_dir)


def run_cs_agent(instances, backend, cfg: EvalConfig | None = None, out_dir=None, method=Method.ZERO_SHOT):
    cfg = cfg or EvalConfig()
    label = method_label("cs-agent", method)
    return _fan_out(instances, label, lambda inst: cs_agent_transcript(inst, method, backend, cfg), cfg, out_dir)


def run_self_consistency(instances, backend, cfg: EvalConfig | None = None, out_dir=None):
    cfg = cfg or EvalConfig()
    return _fan_out(instances, "SC", lambda inst: sc_transcript(inst, backend, cfg), cfg, out_dir)


def rounds_sweep(instances, backend, r_values, cfg: EvalConfig | None = None, method=Method.ZERO_SHOT):
    """``(r, mean_f1, mean_tokens)`` rows, one full CS-Agent run per ``r``.

    Backends with a ``fork`` method get a fresh copy per ``r``.
    """
    r_values = list(r_values)
    if not r_values:
        raise ValueError("r_values must be nonempty")
    cfg = cfg or EvalConfig()
    rows = []
    for r in r_values:
        sub = EvalConfig(**{**asdict(cfg), "rounds": r})
        b = backend.fork() if hasattr(backend, "fork") else backend
        records = run_cs_agent(instances, b, sub, method=method)
        rows.append({
            "r": r,
            "mean_f1": round(100 * sum(x.f1 for x in records) / len(records), 1),
            "mean_tokens": sum(x.prompt_tokens + x.completion_tokens for x in records) / len(records),
            "n_instances": len(records),
        })
    return rows


# -- reports -----------------------------------------------------------------------


def bias_rate(records) -> float:
    records = list(records)
    if not records:
        raise EmptyRecords("no records")
    return sum(r.bias for r in records) / len(records)


def _order(enum_cls, value):
    names = [e.value for e in enum_cls]
    return (names.index(value), value) if value in names else (len(names), value)


def _group_key(key):
    dataset, metric, difficulty, method = key
    return (_order(DatasetKind, dataset), _order(MetricKind, metric),
            _order(Difficulty, difficulty), method)


def aggregate_report(records) -> list[dict]:
    """One row per (dataset, metric, difficulty, method), deterministically ordered.

    Bias-flagged records count as zeros in ``mean_f1``, a percentage rounded
    to one decimal.
    """
    records = list(records)
    if not records:
        raise EmptyRecords("no records")
    groups = defaultdict(list)
    for r in records:
        groups[(r.dataset, r.metric, r.difficulty, r.method)].append(r)
    rows = []
    for key in sorted(groups, key=_group_key):
        group = groups[key]
        rows.append({
            "dataset": key[0],
            "metric": key[1],
            "difficulty": key[2],
            "method": key[3],
            "mean_f1": round(100 * sum(r.f1 for r in group) / len(group), 1),
            "bias_rate": bias_rate(group),
            "n_instances": len(group),
        })
    return rows


def report_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([row["dataset"], row["metric"], row["difficulty"], row["method"],
                         f"{row['mean_f1']:.1f}", f"{row['bias_rate']:.4f}", row["n_instances"]])
    return buf.getvalue()


def plot_data(records) -> dict:
    """Series for the bias bar chart and the per-round F1/score curves."""
    records = list(records)
    bars = defaultdict(list)
    curves = defaultdict(lambda: defaultdict(list))
    for r in records:
        bars[(r.dataset, r.metric, r.method)].append(r.bias)
        for t, value in enumerate(r.round_f1):
            score = r.round_scores[t] if t < len(r.round_scores) else None
            curves[(r.dataset, r.metric, r.method)][t].append((value, score))
    order = lambda k: (_order(DatasetKind, k[0]), _order(MetricKind, k[1]), k[2])  # noqa: E731
    bias_bars = [
        {"dataset": k[0], "metric": k[1], "method": k[2], "bias_rate": sum(v) / len(v), "n": len(v)}
        for k, v in sorted(bars.items(), key=lambda kv: order(kv[0]))
    ]
    round_curves = []
    for k in sorted(curves, key=order):
        for t in sorted(curves[k]):
            pts = curves[k][t]
            scores = [s for _, s in pts if s is not None]
            round_curves.append({
                "dataset": k[0], "metric": k[1], "method": k[2], "round": t,
                "mean_f1": 100 * sum(f for f, _ in pts) / len(pts),
                "mean_score": sum(scores) / len(scores) if scores else None,
                "n": len(pts),
            })
    return {"bias_bars": bias_bars, "round_curves": round_curves}


def write_report(records, out_dir) -> list[dict]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = aggregate_report(records)
    _atomic_write(out / "report.csv", report_csv(rows))
    _atomic_write(out / "plot_data.json", json.dumps(plot_data(records), indent=2, sort_keys=True) + "\n")
    return rows
