"""Judging one statement with either strategy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .agent import DEFAULT_MAX_STEPS, AgentTrace, verify_with_agent
from .claims import DomainError, Strategy, Verdict
from .parsing import RawAnswer, VerdictParseError, parse_verdict
from .prompting import PromptBundle, build_fewshot_prompt
from .provider import MalformedResponse, ModelBackend, ModelRequest, SearchBackend, TransientExhausted

# Failures that cost one sentence its verdict instead of aborting a whole run.
RECOVERABLE = (VerdictParseError, TransientExhausted, MalformedResponse)


@dataclass
class Judgment:
    verdict: Verdict
    raw: str = ""
    trace: Optional[AgentTrace] = None
    warnings: list[str] = field(default_factory=list)


@dataclass
class Judge:
    model: ModelBackend
    search: Optional[SearchBackend] = None
    strategy: Strategy = Strategy.FEW_SHOT
    model_id: str = "mock"
    temperature: float = 0.0
    max_steps: int = DEFAULT_MAX_STEPS
    bundle: Optional[PromptBundle] = None

    def __post_init__(self) -> None:
        if self.strategy is Strategy.AGENT and self.search is None:
            raise DomainError("the agent strategy needs a search backend")

    def check(self, statement: str) -> Judgment:
        """Judge ``statement``; false parts are located in the text as given.

        Raises VerdictParseError and provider errors unchanged.
        """
        question = " ".join(statement.split())
        if not question:
            raise DomainError("statement must be non-empty")
        if self.strategy is Strategy.AGENT:
            verdict, trace = verify_with_agent(
                question, self.model, self.search, self.max_steps,
                model_id=self.model_id, temperature=self.temperature,
                bundle=self.bundle, sentence=statement,
            )
            return Judgment(verdict, trace.final_raw, trace)
        prompt = build_fewshot_prompt(question, self.bundle)
        raw = self.model.complete(ModelRequest.for_prompt(self.model_id, prompt, self.temperature))
        return Judgment(parse_verdict(RawAnswer(raw, Strategy.FEW_SHOT), sentence=statement), raw)

    def check_lenient(self, statement: str) -> Judgment:
        """Like check, but recoverable failures become an unable-to-judge verdict."""
        try:
            return self.check(statement)
        except RECOVERABLE as err:
            message = f"{type(err).__name__}: {err}"
            raw = getattr(err, "raw", "")
            trace = getattr(err, "trace", None)
            if trace is not None and not raw:
                raw = trace.final_raw
            return Judgment(Verdict.unable(reason="", warnings=(message,)), raw, trace, [message])
