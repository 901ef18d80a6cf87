"""Plan / search / synthesize verification of a single claim."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .claims import DomainError, Strategy, Verdict
from .parsing import RawAnswer, parse_verdict
from .prompting import PromptBundle, build_agent_plan_prompt, build_agent_synthesis_prompt
from .provider import DEFAULT_SEARCH_K, ModelBackend, ModelRequest, SearchBackend, SearchResult

DEFAULT_MAX_STEPS = 5

_PLAN_ITEM = re.compile(r"^\s*(?:\d+\s*[.)]|[-*•])\s+(.+?)\s*$")


@dataclass
class AgentStep:
    sub_question: str
    query: str
    results: list[SearchResult] = field(default_factory=list)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "sub_question": self.sub_question,
            "query": self.query,
            "results": [r.to_dict() for r in self.results],
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentStep":
        return cls(
            data["sub_question"],
            data["query"],
            [SearchResult.from_dict(r) for r in data.get("results", ())],
            data.get("error"),
        )


@dataclass
class AgentTrace:
    claim: str
    plan: list[str] = field(default_factory=list)
    steps: list[AgentStep] = field(default_factory=list)
    plan_raw: str = ""
    final_raw: str = ""
    error: Optional[str] = None

    @property
    def step_count(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "plan_raw": self.plan_raw,
            "plan": list(self.plan),
            "steps": [s.to_dict() for s in self.steps],
            "step_count": self.step_count,
            "final_raw": self.final_raw,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentTrace":
        return cls(
            claim=data["claim"],
            plan=list(data.get("plan", ())),
            steps=[AgentStep.from_dict(s) for s in data.get("steps", ())],
            plan_raw=data.get("plan_raw", ""),
            final_raw=data.get("final_raw", ""),
            error=data.get("error"),
        )


def parse_plan(text: str, claim: str, max_steps: int) -> list[str]:
    """Numbered (``1.``, ``1)``) or dashed list items, capped at ``max_steps``.

    An answer with no list items degrades to a single step: the claim itself.
    """
    items = []
    for line in text.splitlines():
        match = _PLAN_ITEM.match(line)
        if match:
            items.append(match.group(1))
    return items[:max_steps] if items else [claim]


def verify_with_agent(
    claim: str,
    model: ModelBackend,
    search: SearchBackend,
    max_steps: int = DEFAULT_MAX_STEPS,
    *,
    model_id: str = "mock",
    temperature: float = 0.0,
    bundle: Optional[PromptBundle] = None,
    sentence: Optional[str] = None,
    k: int = DEFAULT_SEARCH_K,
) -> tuple[Verdict, AgentTrace]:
    """Decompose ``claim`` into sub-questions, search each once, then ask for a verdict.

    Makes at most ``2 + max_steps`` backend calls. Any exception raised on
    the way gets the partial trace attached as ``err.trace``.
    """
    if max_steps < 1:
        raise DomainError("max_steps must be at least 1")
    trace = AgentTrace(claim)
    try:
        plan_request = ModelRequest.for_prompt(model_id, build_agent_plan_prompt(claim, max_steps), temperature)
        trace.plan_raw = model.complete(plan_request)
        trace.plan = parse_plan(trace.plan_raw, claim, max_steps)

        evidence = []
        for sub_question in trace.plan:
            step = AgentStep(sub_question, sub_question)
            trace.steps.append(step)
            try:
                step.results = search.search(step.query, k)
            except Exception as err:
                step.error = f"{type(err).__name__}: {err}"
                raise
            evidence.append((step.query, step.results))

        synthesis = build_agent_synthesis_prompt(claim, evidence, bundle)
        trace.final_raw = model.complete(ModelRequest.for_prompt(model_id, synthesis, temperature))
        verdict = parse_verdict(RawAnswer(trace.final_raw, Strategy.AGENT), sentence=sentence)
    except Exception as err:
        trace.error = f"{type(err).__name__}: {err}"
        err.trace = trace
        raise
    return verdict, trace
