"""Solver/Validator refinement dialogue.

Round 0: the Solver sees the graph and the task. Each later round it sees its
own history, the Validator's last feedback and an update prompt. After every
Solver turn the Validator scores the candidate; its memory is wiped whenever
the Solver repeats the previous round's community.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace

from .backend import ChatRequest
from .errors import BackendError
from .extraction import extract_community, extract_score, format_community
from .graph import TaskInstance
from .prompting import (
    ANSWER_CONTRACT,
    TEMPLATE_VERSION,
    Method,
    build_prompt,
    metric_definition,
    render,
    template,
    verbalize_graph,
)

log = logging.getLogger(__name__)

SOLVER, VALIDATOR = "Solver", "Validator"


@dataclass(frozen=True)
class AgentState:
    role: str
    role_prompt: str
    task_instruction: str
    memory: tuple = ()  # alternating user/assistant message dicts

    def request(self, user_text: str, temperature: float, model_id: str = "") -> ChatRequest:
        messages = (
            {"role": "system", "content": self.role_prompt},
            *self.memory,
            {"role": "user", "content": user_text},
        )
        return ChatRequest(messages, temperature=temperature, model_id=model_id)

    def remember(self, user_text: str, reply: str) -> "AgentState":
        exchange = ({"role": "user", "content": user_text}, {"role": "assistant", "content": reply})
        return replace(self, memory=self.memory + exchange)

    def purged(self) -> "AgentState":
        return replace(self, memory=())


@dataclass
class SolverTurn:
    round: int
    prompt: str
    raw_text: str
    community: frozenset | None  # None: output bias
    messages: list = field(default_factory=list)
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass
class ValidatorTurn:
    round: int
    prompt: str
    raw_text: str
    feedback: str
    score: float | None  # as parsed; None when the reply had no score
    purge_applied: bool = False
    messages: list = field(default_factory=list)
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def score_missing(self) -> bool:
        return self.score is None

    @property
    def effective_score(self) -> float:
        return 0.0 if self.score is None else self.score


@dataclass
class DialogueTranscript:
    instance_id: str
    config: dict
    solver_turns: list = field(default_factory=list)
    validator_turns: list = field(default_factory=list)
    aborted: bool = False
    error: str | None = None
    decision: dict | None = None
    kind: str = "cs-agent"

    @property
    def rounds_completed(self) -> int:
        return len(self.solver_turns)

    @property
    def prompt_tokens(self) -> int:
        return sum(t.prompt_tokens for t in self.solver_turns + self.validator_turns)

    @property
    def completion_tokens(self) -> int:
        return sum(t.completion_tokens for t in self.solver_turns + self.validator_turns)

    @property
    def purge_rounds(self) -> list[int]:
        return [t.round for t in self.validator_turns if t.purge_applied]

    def to_dict(self) -> dict:
        def turn(t):
            d = asdict(t)
            if "community" in d:
                d["community"] = None if t.community is None else sorted(t.community)
            return d

        return {
            "kind": self.kind,
            "instance_id": self.instance_id,
            "config": self.config,
            "solver_turns": [turn(t) for t in self.solver_turns],
            "validator_turns": [turn(t) for t in self.validator_turns],
            "aborted": self.aborted,
            "error": self.error,
            "decision": self.decision,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, obj: dict) -> "DialogueTranscript":
        solver = []
        for d in obj["solver_turns"]:
            d = dict(d)
            d["community"] = None if d["community"] is None else frozenset(d["community"])
            solver.append(SolverTurn(**d))
        return cls(
            instance_id=obj["instance_id"],
            config=obj["config"],
            solver_turns=solver,
            validator_turns=[ValidatorTurn(**d) for d in obj["validator_turns"]],
            aborted=obj["aborted"],
            error=obj["error"],
            decision=obj["decision"],
            kind=obj.get("kind", "cs-agent"),
        )

    @classmethod
    def from_json(cls, text: str) -> "DialogueTranscript":
        return cls.from_dict(json.loads(text))


def solver_state(inst: TaskInstance, method=Method.ZERO_SHOT, rng=None) -> AgentState:
    bundle = build_prompt(inst, method, rng=rng)
    return AgentState(SOLVER, template("solver_role.txt"), bundle.user_prompt)


def validator_state() -> AgentState:
    return AgentState(VALIDATOR, template("validator_role.txt"), template("validator_task.txt"))


def solver_step(state: AgentState, inst: TaskInstance, t: int, feedback: str | None,
                backend, temperature: float = 0.5, model_id: str = ""):
    """One Solver turn; returns ``(new_state, SolverTurn)``.

    Round 0 sends only the task prompt and ignores ``feedback``.
    """
    if t == 0:
        user = state.task_instruction
    else:
        update = render("solver_update.txt", round=t, query=inst.query, contract=ANSWER_CONTRACT)
        user = f"Reviewer feedback:\n{feedback or ''}\n\n{update}"
    request = state.request(user, temperature, model_id)
    resp = backend.complete(request)
    turn = SolverTurn(
        round=t,
        prompt=user,
        raw_text=resp.text,
        community=extract_community(resp.text, inst.graph.n),
        messages=[dict(m) for m in request.messages],
        prompt_tokens=resp.prompt_tokens,
        completion_tokens=resp.completion_tokens,
    )
    return state.remember(user, resp.text), turn


def _feedback(text: str) -> str:
    kept = [line for line in text.splitlines() if extract_score(line) is None]
    body = "\n".join(kept).strip()
    return body or text.strip()


def validator_step(state: AgentState, inst: TaskInstance, t: int, community: frozenset | None,
                   previous: frozenset | None, backend, temperature: float = 0.5,
                   model_id: str = ""):
    """One Validator turn; returns ``(new_state, ValidatorTurn)``.

    Memory is purged first when ``community`` equals ``previous`` as a set.
    """
    purge = t > 0 and community is not None and previous is not None and community == previous
    if purge:
        state = state.purged()
    common = dict(
        round=t,
        graph=verbalize_graph(inst.graph, inst.query),
        definition=metric_definition(inst.metric, inst.k),
        query=inst.query,
    )
    if community is None:
        user = render("validator_no_community.txt", **common)
    else:
        candidate = format_community(community).removeprefix("Community: ")
        user = render("validator_task.txt", candidate=candidate, **common)
    request = state.request(user, temperature, model_id)
    resp = backend.complete(request)
    score = extract_score(resp.text)
    if score is None:
        log.warning("%s round %d: validator reply has no score; using 0.0", inst.instance_id, t)
    turn = ValidatorTurn(
        round=t,
        prompt=user,
        raw_text=resp.text,
        feedback=_feedback(resp.text),
        score=score,
        purge_applied=purge,
        messages=[dict(m) for m in request.messages],
        prompt_tokens=resp.prompt_tokens,
        completion_tokens=resp.completion_tokens,
    )
    return state.remember(user, resp.text), turn


def dialogue_config(inst: TaskInstance, rounds: int, method, temperature: float, model_id: str) -> dict:
    method = Method.parse(method) if isinstance(method, str) else Method(method)
    return {
        "rounds": rounds,
        "method": method.value,
        "temperature": temperature,
        "model_id": model_id,
        "template_version": TEMPLATE_VERSION,
        "n": inst.graph.n,
        "query": inst.query,
        "metric": inst.metric.value,
        "k": inst.k,
        "dataset": inst.dataset.value,
        "difficulty": inst.difficulty.value,
        "ground_truth": sorted(inst.ground_truth),
    }


def run_dialogue(inst: TaskInstance, backend, rounds: int = 3, method=Method.ZERO_SHOT,
                 temperature: float = 0.5, model_id: str = "", rng=None) -> DialogueTranscript:
    """Run ``rounds`` Solver/Validator exchanges.

    A backend failure stops the loop and marks the transcript aborted; the
    turns completed so far are kept.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    transcript = DialogueTranscript(inst.instance_id, dialogue_config(inst, rounds, method, temperature, model_id))
    solver = solver_state(inst, method, rng)
    validator = validator_state()
    feedback = None
    previous = None
    try:
        for t in range(rounds):
            solver, s_turn = solver_step(solver, inst, t, feedback, backend, temperature, model_id)
            transcript.solver_turns.append(s_turn)
            validator, v_turn = validator_step(
                validator, inst, t, s_turn.community, previous, backend, temperature, model_id
            )
            transcript.validator_turns.append(v_turn)
            feedback = v_turn.feedback
            previous = s_turn.community
    except BackendError as exc:
        log.error("%s: dialogue aborted: %s", inst.instance_id, exc)
        transcript.aborted = True
        transcript.error = f"{type(exc).__name__}: {exc}"
    return transcript
