import logging
from pathlib import Path

import pytest

from csagent.agent import (
    DialogueTranscript,
    run_dialogue,
    solver_state,
    solver_step,
    validator_state,
    validator_step,
)
from csagent.backend import Rule, ScriptedBackend, load_script
from csagent.graph import read_dataset
from csagent.prompting import Method, build_prompt, verbalize_graph

FIX = Path(__file__).parent / "fixtures"


@pytest.fixture
def golden():
    return read_dataset(FIX / "golden_dataset.jsonl")[0], load_script(FIX / "golden.txt")


def script(*pairs):
    out = []
    for solver, validator in pairs:
        out += [solver, validator]
    return ScriptedBackend(out)


def test_golden_transcript(golden):
    inst, backend = golden
    tr = run_dialogue(inst, backend, rounds=3)
    assert [t.community for t in tr.solver_turns] == [{0, 1, 2, 3, 4}, {0, 1, 2, 3}, {0, 1, 2, 3}]
    assert [t.score for t in tr.validator_turns] == [2.0, 5.0, 5.0]
    assert tr.purge_rounds == [2]
    # requests alternate solver, validator; the round-2 validator request is fresh
    r2 = backend.requests[5]
    assert [m["role"] for m in r2.messages] == ["system", "user"]
    for earlier in (tr.validator_turns[0], tr.validator_turns[1]):
        assert earlier.raw_text not in r2.full_text()
        assert earlier.prompt not in r2.full_text()


def test_no_purge_when_communities_change(golden):
    inst, _ = golden
    b = script(("Community: [0, 1]", "Score: 1"), ("Community: [0, 1, 2]", "Score: 2"),
               ("Community: [0, 1, 2, 3]", "Score: 5"))
    tr = run_dialogue(inst, b, rounds=3)
    assert len(tr.solver_turns) == len(tr.validator_turns) == 3
    assert tr.purge_rounds == []
    # validator memory keeps growing without a purge
    assert len(b.requests[5].messages) == 6


def test_purge_uses_set_equality(golden):
    inst, _ = golden
    b = script(("Community: [3, 2, 1, 0]", "Score: 4"), ("Community: [0, 1, 2, 3]", "Score: 4"))
    assert run_dialogue(inst, b, rounds=2).purge_rounds == [1]


def test_round_zero_request_is_task_only(golden):
    inst, backend = golden
    run_dialogue(inst, backend, rounds=3)
    first = backend.requests[0]
    bundle = build_prompt(inst, Method.ZERO_SHOT)
    assert [m["role"] for m in first.messages] == ["system", "user"]
    assert first.messages[1]["content"] == bundle.user_prompt
    assert verbalize_graph(inst.graph, inst.query) in first.last_user


def test_feedback_reaches_solver_verbatim(golden):
    inst, backend = golden
    tr = run_dialogue(inst, backend, rounds=3)
    for t in (1, 2):
        assert tr.validator_turns[t - 1].feedback in backend.requests[2 * t].last_user
    assert "Drop node 4." in tr.validator_turns[0].feedback
    assert "Score" not in tr.validator_turns[0].feedback


def test_single_round(golden):
    inst, backend = golden
    tr = run_dialogue(inst, backend, rounds=1)
    assert tr.rounds_completed == 1 and len(backend.requests) == 2
    with pytest.raises(ValueError):
        run_dialogue(inst, backend, rounds=0)


def test_bias_turn_still_reviewed(golden):
    inst, _ = golden
    b = script(("```python\nprint(1)\n```", "Give the list. Score: 0"), ("Community: [0, 1, 2, 3]", "Score: 5"))
    tr = run_dialogue(inst, b, rounds=2)
    assert tr.solver_turns[0].community is None
    assert "did not return a community" in b.requests[1].last_user
    assert tr.solver_turns[1].community == {0, 1, 2, 3}


def test_missing_score_is_flagged(golden, caplog):
    inst, _ = golden
    b = script(("Community: [0, 1, 2, 3]", "Looks right to me."),)
    with caplog.at_level(logging.WARNING):
        tr = run_dialogue(inst, b, rounds=1)
    v = tr.validator_turns[0]
    assert v.score is None and v.score_missing and v.effective_score == 0.0
    assert "no score" in caplog.text


def test_backend_failure_aborts_with_partial_transcript(golden):
    inst, _ = golden
    b = ScriptedBackend(["Community: [0, 1, 2, 3]", "Score: 5", "Community: [0, 1]"])
    tr = run_dialogue(inst, b, rounds=3)
    assert tr.aborted and "ScriptExhausted" in tr.error
    assert len(tr.solver_turns) == 2 and len(tr.validator_turns) == 1


def test_transcript_roundtrip_and_determinism(golden):
    inst, backend = golden
    a = run_dialogue(inst, backend, rounds=3)
    b = run_dialogue(inst, backend.fork(), rounds=3)
    assert a.to_json() == b.to_json()
    again = DialogueTranscript.from_json(a.to_json())
    assert again.to_json() == a.to_json()
    assert again.solver_turns[0].community == {0, 1, 2, 3, 4}


def test_steps_individually(golden):
    inst, _ = golden
    b = ScriptedBackend(rules=[Rule("review the candidate", "Node 4 has internal degree 1.\nScore: 1"),
                               Rule(".", "Community: [0, 1, 2, 3, 4]")])
    s0 = solver_state(inst)
    s1, turn = solver_step(s0, inst, 0, "IGNORED FEEDBACK", b)
    assert "IGNORED FEEDBACK" not in b.requests[-1].full_text()
    assert len(s1.memory) == len(s0.memory) + 2
    v0 = validator_state()
    v1, vturn = validator_step(v0, inst, 0, turn.community, None, b)
    assert vturn.feedback.strip() and vturn.score == 1.0
    assert len(v1.memory) == 2
    v2, vturn2 = validator_step(v1, inst, 1, turn.community, turn.community, b)
    assert vturn2.purge_applied and len(v2.memory) == 2
