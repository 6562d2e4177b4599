"""Pick the final community from a dialogue's candidates.

Candidates are ranked by average Validator score, then by how often they were
proposed, then by the round they first appeared in (later wins by default),
then lexicographically.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import NoCandidates

DEPTH_PREFERENCES = ("later", "earlier")


@dataclass(frozen=True)
class CandidateProfile:
    community: frozenset
    avg_score: float
    frequency: int
    first_round: int


def _observations(transcript):
    """``(round, community, score)`` for every non-bias Solver turn."""
    scores = {v.round: v.effective_score for v in transcript.validator_turns}
    return [
        (s.round, s.community, scores.get(s.round, 0.0))
        for s in transcript.solver_turns
        if s.community is not None
    ]


def profiles_from_observations(observations) -> list[CandidateProfile]:
    seen: dict[frozenset, list] = {}
    for rnd, community, score in sorted(observations, key=lambda o: o[0]):
        community = frozenset(community)
        entry = seen.setdefault(community, [rnd, []])
        entry[1].append(score)
    if not seen:
        raise NoCandidates("every round was flagged as output bias")
    return [
        CandidateProfile(c, sum(scores) / len(scores), len(scores), first)
        for c, (first, scores) in seen.items()
    ]


def aggregate_features(transcript) -> list[CandidateProfile]:
    """One profile per distinct community, ordered by first appearance.

    A round whose Validator gave no score contributes 0.0 to the average.
    """
    return profiles_from_observations(_observations(transcript))


def _lex(p: CandidateProfile) -> tuple:
    return tuple(sorted(p.community))


def select_with_rationale(profiles, depth_preference: str = "later") -> tuple[frozenset, dict]:
    if depth_preference not in DEPTH_PREFERENCES:
        raise ValueError(f"depth_preference must be one of {DEPTH_PREFERENCES}")
    pool = list(profiles)
    if not pool:
        raise NoCandidates("no candidate communities to select from")
    sign = 1 if depth_preference == "later" else -1
    stages = [
        ("avg_score", lambda p: round(p.avg_score, 9)),
        ("frequency", lambda p: p.frequency),
        ("first_round", lambda p: sign * p.first_round),
    ]
    criterion = "only_candidate" if len(pool) == 1 else None
    for name, key in stages:
        if len(pool) == 1:
            break
        best = max(key(p) for p in pool)
        pool = [p for p in pool if key(p) == best]
        if len(pool) == 1:
            criterion = name
    if len(pool) > 1:
        pool = [min(pool, key=_lex)]
        criterion = "lexicographic"
    winner = pool[0]
    rationale = {
        "criterion": criterion,
        "depth_preference": depth_preference,
        "selected": sorted(winner.community),
        "avg_score": winner.avg_score,
        "frequency": winner.frequency,
        "first_round": winner.first_round,
        "n_candidates": len(list(profiles)),
    }
    return winner.community, rationale


def select(profiles, depth_preference: str = "later") -> frozenset:
    return select_with_rationale(profiles, depth_preference)[0]


def decide(transcript, depth_preference: str = "later") -> frozenset | None:
    """Select from a transcript and write the rationale into its footer.

    Returns None when no round produced a community.
    """
    try:
        profiles = aggregate_features(transcript)
    except NoCandidates:
        transcript.decision = {"criterion": None, "selected": None, "depth_preference": depth_preference}
        return None
    chosen, rationale = select_with_rationale(profiles, depth_preference)
    rationale["profiles"] = [
        {
            "community": sorted(p.community),
            "avg_score": p.avg_score,
            "frequency": p.frequency,
            "first_round": p.first_round,
        }
        for p in profiles
    ]
    transcript.decision = rationale
    return chosen
