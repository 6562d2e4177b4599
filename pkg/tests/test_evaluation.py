import csv
import io
import itertools
import json
from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from csagent.backend import Rule, ScriptedBackend, load_script
from csagent.cli import oracle_rules
from csagent.errors import EmptyRecords, EmptyTruth
from csagent.evaluation import (
    RESULT_COLUMNS,
    EvalConfig,
    RecordStore,
    aggregate_report,
    bias_rate,
    f1,
    majority_vote,
    plot_data,
    read_records,
    report_csv,
    rounds_sweep,
    run_baseline,
    run_cs_agent,
    run_self_consistency,
    write_report,
)
from csagent.generators import DatasetSpec, build_dataset
from csagent.graph import read_dataset
from csagent.prompting import Method

FIX = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="module")
def instances():
    return build_dataset(DatasetSpec("PSG", {"Easy": 2, "Medium": 1}, base_seed=5))[0]


def oracle(instances, score=5):
    return ScriptedBackend(rules=oracle_rules(instances, score))


def test_f1_examples():
    assert f1({0, 1, 2}, {0, 1, 2}) == 1.0
    assert f1({0, 1, 2}, {1, 2, 3}) == pytest.approx(2 / 3, abs=1e-9)
    assert f1(set(), {1}) == 0.0 and f1(None, {1}) == 0.0
    with pytest.raises(EmptyTruth):
        f1({1}, set())


@given(st.sets(st.integers(0, 12)), st.sets(st.integers(0, 12), min_size=1), st.permutations(list(range(13))))
def test_f1_properties(pred, truth, perm):
    v = f1(pred, truth)
    assert 0.0 <= v <= 1.0
    assert (v == 1.0) == (pred == truth)
    assert f1({perm[x] for x in pred}, {perm[x] for x in truth}) == pytest.approx(v)


def test_majority_vote_examples():
    assert majority_vote([{0, 1}, {0, 2}, {0, 1, 3}], 3) == {0, 1}
    assert majority_vote([{4, 5}], 1) == {4, 5}
    assert majority_vote([{1, 2}] * 3, 3) == {1, 2}
    assert majority_vote([None, None, {7}], 3) == frozenset()
    with pytest.raises(ValueError):
        majority_vote([], 0)


@given(st.lists(st.one_of(st.none(), st.frozensets(st.integers(0, 8))), min_size=1, max_size=7))
def test_majority_vote_matches_direct_count(cands):
    k = len(cands)
    expect = {v for v in range(9) if 2 * sum(1 for c in cands if c is not None and v in c) >= k}
    assert majority_vote(cands, k) == expect


def test_baseline_oracle_script(instances, tmp_path):
    recs = run_baseline(instances, Method.ZERO_SHOT, oracle(instances), out_dir=tmp_path)
    assert len(recs) == len(instances)
    assert all(r.f1 == 1.0 and not r.bias for r in recs)
    rows = aggregate_report(recs)
    assert all(r["mean_f1"] == 100.0 and r["bias_rate"] == 0 for r in rows)
    assert sum(r["n_instances"] for r in rows) == len(instances)
    header = (tmp_path / "results.csv").read_text().splitlines()[0]
    assert header == ",".join(RESULT_COLUMNS)


def test_baseline_code_blocks_are_bias(instances):
    b = ScriptedBackend(rules=[Rule(".", "```python\ndef solve(g):\n    return [0]\n```")])
    recs = run_baseline(instances, "few-shot", b)
    assert bias_rate(recs) == 1.0 and all(r.f1 == 0 and r.predicted is None for r in recs)


def test_resume_after_kill(instances, tmp_path):
    b = oracle(instances)
    half = instances[: len(instances) // 2]
    run_baseline(half, Method.ZERO_SHOT, b, out_dir=tmp_path)
    # simulate a kill mid-write: a staged record plus a torn line
    store = RecordStore(tmp_path)
    extra = run_baseline(instances[-1:], Method.ZERO_SHOT, b)[0]
    with open(store.staging_path, "a") as fh:
        fh.write(extra.to_json() + "\n" + '{"instance_id": "PSG-Ea')
    before = len(b.requests)
    recs = run_baseline(instances, Method.ZERO_SHOT, b, out_dir=tmp_path)
    assert len(b.requests) - before == len(instances) - len(half) - 1
    stored = read_records(tmp_path / "records.jsonl")
    ids = [r.instance_id for r in stored]
    assert len(ids) == len(set(ids)) == len(instances) == len(recs)
    assert not store.staging_path.exists()


def test_cs_agent_golden():
    inst = read_dataset(FIX / "golden_dataset.jsonl")
    rec = run_cs_agent(inst, load_script(FIX / "golden.txt"))[0]
    assert rec.f1 == 1.0 and rec.rounds_used == 3 and rec.method == "CSAgent(ZeroShot)"
    assert rec.round_f1[0] == pytest.approx(f1({0, 1, 2, 3, 4}, {0, 1, 2, 3}))
    assert rec.round_scores == [2.0, 5.0, 5.0]


def test_cs_agent_single_round_and_all_bias(instances):
    rec = run_cs_agent(instances[:1], oracle(instances), EvalConfig(rounds=1))[0]
    assert rec.rounds_used == 1 and rec.f1 == 1.0
    bias = ScriptedBackend(rules=[Rule("review|did not return", "Score: 0"), Rule(".", "Use BFS from the query.")])
    rec = run_cs_agent(instances[:1], bias)[0]
    assert rec.bias and rec.f1 == 0 and rec.predicted is None


def test_cs_agent_abort_scores_partial(instances):
    inst = instances[0]
    truth = sorted(inst.ground_truth)
    b = ScriptedBackend([f"Community: {truth}", "Score: 4", "Community: [0]"])
    rec = run_cs_agent([inst], b)[0]
    assert rec.aborted and rec.f1 == 1.0 and rec.rounds_used == 2


def test_self_consistency(instances):
    inst = instances[0]
    truth = sorted(inst.ground_truth)
    b = ScriptedBackend([f"Community: {truth}", "no idea", f"Community: {truth}"])
    rec = run_self_consistency([inst], b, EvalConfig(sc_k=3))[0]
    assert rec.method == "SC" and rec.f1 == 1.0
    assert all(r.temperature == 0.8 for r in b.requests)
    one = run_self_consistency([inst], ScriptedBackend([f"Community: {truth}"]), EvalConfig(sc_k=1))[0]
    zero = run_baseline([inst], Method.ZERO_SHOT, ScriptedBackend([f"Community: {truth}"]))[0]
    assert one.predicted == zero.predicted and one.f1 == zero.f1
    allbias = run_self_consistency([inst], ScriptedBackend(rules=[Rule(".", "use code")]))[0]
    assert allbias.bias and allbias.f1 == 0


def test_baseline_temperature(instances):
    b = oracle(instances)
    run_baseline(instances[:1], Method.ZERO_SHOT, b)
    assert b.requests[0].temperature == 0.5


def test_rounds_sweep(instances):
    rows = rounds_sweep(instances[:3], oracle(instances), [1, 2, 3, 4])
    tokens = [r["mean_tokens"] for r in rows]
    assert all(a < b for a, b in zip(tokens, tokens[1:]))
    assert {r["mean_f1"] for r in rows} == {100.0}
    with pytest.raises(ValueError):
        rounds_sweep(instances, oracle(instances), [])


def test_sweep_single_value_matches_run(instances):
    rows = rounds_sweep(instances[:2], oracle(instances), [3])
    recs = run_cs_agent(instances[:2], oracle(instances))
    assert rows[0]["mean_tokens"] == sum(r.prompt_tokens + r.completion_tokens for r in recs) / 2


def test_report_grouping_24_rows():
    instances = []
    for ds in ("PSG", "LFR"):
        instances += build_dataset(DatasetSpec(ds, {"Easy": 1, "Medium": 1, "Hard": 1}, base_seed=2))[0]
    recs = run_baseline(instances, Method.ZERO_SHOT, oracle(instances))
    rows = aggregate_report(recs)
    assert len(rows) == 24
    assert [(r["dataset"], r["metric"], r["difficulty"]) for r in rows][:3] == [
        ("PSG", "Core", "Easy"), ("PSG", "Core", "Medium"), ("PSG", "Core", "Hard")]
    text = report_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert all(p["mean_f1"] == "100.0" for p in parsed)


def test_bias_rate_and_empty():
    from csagent.evaluation import EvalRecord

    recs = [EvalRecord("i", "PSG", "Core", "Easy", "ZeroShot", None if i < 2 else [0], 0.0, i < 2, 1, 0, 0)
            for i in range(10)]
    assert bias_rate(recs) == 0.2
    rows = aggregate_report(recs)
    assert rows[0]["mean_f1"] == 0.0 and rows[0]["n_instances"] == 10
    with pytest.raises(EmptyRecords):
        bias_rate([])
    with pytest.raises(EmptyRecords):
        aggregate_report([])


def test_report_files_deterministic(instances, tmp_path):
    outs = []
    for name in ("a", "b"):
        recs = run_cs_agent(instances, oracle(instances), out_dir=tmp_path / name / "run")
        write_report(recs, tmp_path / name / "rep")
        outs.append(((tmp_path / name / "rep" / "report.csv").read_bytes(),
                     (tmp_path / name / "rep" / "plot_data.json").read_bytes()))
    assert outs[0] == outs[1]
    data = json.loads(outs[0][1])
    assert data["bias_bars"] and {c["round"] for c in data["round_curves"]} == {0, 1, 2}


def test_plot_data_shapes(instances):
    recs = run_cs_agent(instances[:2], oracle(instances, score=4))
    data = plot_data(recs)
    assert all(c["mean_score"] == 4.0 for c in data["round_curves"])
