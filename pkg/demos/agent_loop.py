"""Walk through the plan / search / synthesize loop and print its trace."""

from verity.agent import verify_with_agent
from verity.provider import FixtureSearch, MockBackend, SearchResult

claim = "The Eiffel Tower was completed in 1889 for the World's Fair."

model = MockBackend(
    answers={claim: "Veracity score: 100% (True), False Part: /, Reason: Both facts are well documented."},
    plans={claim: "1. eiffel tower completion date\n2. eiffel tower 1889 exposition universelle"},
)
search = FixtureSearch({
    "eiffel tower completion date": [
        SearchResult("Eiffel Tower history", "https://example.org/eiffel", "Construction finished in March 1889."),
    ],
    "eiffel tower 1889 exposition universelle": [
        SearchResult("1889 World's Fair", "https://example.org/expo-1889", "The tower served as the fair's entrance arch."),
        SearchResult("Paris exhibitions", "https://example.org/paris-expos", "The Exposition Universelle opened in May 1889."),
    ],
})

verdict, trace = verify_with_agent(claim, model, search, max_steps=3)

print(f"claim: {trace.claim}")
print("plan:")
for step in trace.steps:
    print(f"  - {step.sub_question}")
    for result in step.results:
        print(f"      {result.title}: {result.snippet}")
print(f"final answer: {trace.final_raw}")
print(f"verdict: {verdict.score}% ({verdict.label.value})")
print(f"backend calls: {model.calls} model + {search.calls} search")
