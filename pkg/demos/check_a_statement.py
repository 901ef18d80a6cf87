"""Judge single statements with the few-shot prompt.

A canned backend stands in for the model so the demo runs offline; swap
in ``HttpChatBackend`` (or run ``verity check``) to ask a real endpoint.
"""

from verity import Judge, build_fewshot_prompt
from verity.provider import MockBackend

statements = {
    "As Governor, Romney did not keep public safety funding in line with inflation.":
        "Veracity score: 30% (Mostly False), False Part: did not keep",
    "The Great Wall of China is visible from the Moon with the naked eye.":
        "Veracity score: 0% (False), False Part: visible from the Moon, Reason: It is far too narrow to see.",
    "Chocolate ice cream is the best flavour.": "null",
}

# The prompt the model would receive for the first statement
first = next(iter(statements))
print(build_fewshot_prompt(first))
print()

judge = Judge(MockBackend(statements))
for text in statements:
    verdict = judge.check(text).verdict
    print(text)
    if verdict.is_judged:
        print(f"  {verdict.score}% ({verdict.label.value})")
        for part in verdict.false_parts:
            start, end = part.span
            print(f"  false part {part.text!r} at [{start}, {end})")
        if verdict.reason:
            print(f"  reason: {verdict.reason}")
    else:
        print(f"  {verdict.outcome.value}")
