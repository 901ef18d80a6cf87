"""Few-shot and agent prompt rendering from versioned template files.

Template files are plain text split into named sections by marker lines
such as ``--- role_set ---``. The few-shot template carries ``role_set``,
``instruction``, ``examples`` and ``question``; examples alternate
``input: "..."`` and ``output: ...`` lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

from .claims import DomainError

DEFAULT_FEWSHOT = "fewshot_v1.txt"
DEFAULT_PLAN = "agent_plan_v1.txt"
EVIDENCE_BUDGET = 4000
NO_EVIDENCE = "No evidence retrieved."
TRUNCATION_NOTE = "[further evidence omitted]"
PLAN_CUE = "Sub-questions:"

_SECTION = re.compile(r"^--- (\w+) ---$", re.MULTILINE)
_QUESTION_LINE = re.compile(r'^(?:input|Claim): "(.*)"\s*$', re.MULTILINE)


def parse_sections(text: str) -> dict[str, str]:
    markers = list(_SECTION.finditer(text))
    if not markers:
        raise ValueError("template has no section markers")
    sections = {}
    for i, marker in enumerate(markers):
        end = markers[i + 1].start() if i + 1 < len(markers) else len(text)
        sections[marker.group(1)] = text[marker.end():end].strip("\n")
    return sections


def _read_template(name: str) -> str:
    return resources.files("verity.data.prompts").joinpath(name).read_text("utf-8")


def _unquote_input(line: str) -> str:
    if not line.startswith("input:"):
        raise ValueError(f"expected an input: line, got {line!r}")
    body = line[len("input:"):].strip()
    if len(body) < 2 or body[0] != '"' or body[-1] != '"':
        raise ValueError(f"input must be double-quoted: {line!r}")
    return body[1:-1]


def parse_examples(block: str) -> tuple[tuple[str, str], ...]:
    lines = [ln for ln in block.split("\n") if ln.strip()]
    if len(lines) % 2:
        raise ValueError("examples must alternate input:/output: lines")
    pairs = []
    for inp, out in zip(lines[::2], lines[1::2]):
        if not out.startswith("output:"):
            raise ValueError(f"expected an output: line, got {out!r}")
        pairs.append((_unquote_input(inp), out[len("output:"):].strip()))
    return tuple(pairs)


@dataclass(frozen=True)
class PromptBundle:
    role_set: str
    instruction: str
    examples: tuple[tuple[str, str], ...]
    question: str
    version: str = ""

    @classmethod
    def from_text(cls, text: str, version: str = "") -> "PromptBundle":
        sections = parse_sections(text)
        missing = {"role_set", "instruction", "examples", "question"} - sections.keys()
        if missing:
            raise ValueError(f"template missing sections: {sorted(missing)}")
        if "{statement}" not in sections["question"]:
            raise ValueError("question section needs a {statement} placeholder")
        return cls(
            sections["role_set"],
            sections["instruction"],
            parse_examples(sections["examples"]),
            sections["question"],
            version,
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PromptBundle":
        path = Path(path)
        return cls.from_text(path.read_text("utf-8"), version=path.stem)

    def render_examples(self) -> str:
        return "\n".join(f'input: "{inp}"\noutput: {out}' for inp, out in self.examples)

    def render_question(self, statement: str) -> str:
        return self.question.replace("{statement}", statement)


@lru_cache(maxsize=None)
def default_bundle() -> PromptBundle:
    return PromptBundle.from_text(_read_template(DEFAULT_FEWSHOT), version=Path(DEFAULT_FEWSHOT).stem)


def _check_text(value: str, what: str) -> None:
    if not value or not value.strip():
        raise DomainError(f"{what} must be non-empty")


def _render(bundle: PromptBundle, statement: str, evidence: Optional[str] = None) -> str:
    parts = [
        f"Role set:\n{bundle.role_set}",
        f"Instruction:\n{bundle.instruction}",
        f"Examples:\n{bundle.render_examples()}",
    ]
    if evidence is not None:
        parts.append(f"Evidence:\n{evidence}")
    parts.append(f"Question:\n{bundle.render_question(statement)}")
    return "\n\n".join(parts)


def build_fewshot_prompt(statement: str, bundle: Optional[PromptBundle] = None) -> str:
    """Render the four-part judging prompt with ``statement`` as the question."""
    _check_text(statement, "statement")
    return _render(bundle or default_bundle(), statement)


@lru_cache(maxsize=None)
def _plan_template() -> str:
    return _read_template(DEFAULT_PLAN)


def plan_template_length() -> int:
    return len(_plan_template())


def build_agent_plan_prompt(claim: str, max_steps: int = 5) -> str:
    _check_text(claim, "claim")
    if max_steps < 1:
        raise DomainError("max_steps must be at least 1")
    sections = parse_sections(_plan_template())
    instruction = sections["instruction"].replace("{max_steps}", str(max_steps))
    question = sections["question"].replace("{claim}", claim)
    return f"Instruction:\n{instruction}\n\nQuestion:\n{question}"


def is_plan_prompt(prompt: str) -> bool:
    return prompt.rstrip().endswith(PLAN_CUE)


def question_of(prompt: str) -> Optional[str]:
    """The statement or claim a rendered prompt asks about (its last quoted question line)."""
    found = _QUESTION_LINE.findall(prompt)
    return found[-1] if found else None


def render_evidence(evidence: Sequence[tuple[str, Sequence]], budget: int = EVIDENCE_BUDGET) -> str:
    """Evidence block: each query followed by its snippets, earliest first.

    Snippet lines are kept in order until the next one would push the total
    snippet text past ``budget`` characters; everything after is dropped.
    """
    if not evidence:
        return NO_EVIDENCE
    lines = []
    used = 0
    truncated = False
    for number, (query, results) in enumerate(evidence, 1):
        if truncated:
            break
        lines.append(f'[{number}] query: "{query}"')
        if not results:
            lines.append("- (no results)")
        for result in results:
            line = f"- {result.title} ({result.url}): {result.snippet}"
            if used + len(line) > budget:
                truncated = True
                break
            used += len(line)
            lines.append(line)
    if truncated:
        lines.append(TRUNCATION_NOTE)
    return "\n".join(lines)


def build_agent_synthesis_prompt(
    claim: str,
    evidence: Sequence[tuple[str, Sequence]],
    bundle: Optional[PromptBundle] = None,
    budget: int = EVIDENCE_BUDGET,
) -> str:
    """The few-shot prompt with an Evidence section placed before the question."""
    _check_text(claim, "claim")
    return _render(bundle or default_bundle(), claim, render_evidence(evidence, budget))
