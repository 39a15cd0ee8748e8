import json

import pytest

from cityforge.errors import (
    DesignValidationError,
    EmptyCorpusError,
    PlanValidationError,
)
from cityforge.jsonio import canonical_json
from cityforge.model import layout_to_dict
from cityforge.planner import (
    CorpusDoc,
    PlanRequest,
    ReferenceSummary,
    design_city,
    global_plan,
    local_design,
    retrieve_reference_summary,
)
from cityforge.providers import cosine
from cityforge.providers.mocks import (
    ConstantEmbedMock,
    DeterministicChatMock,
    mock_provider_set,
)
from helpers import EXAMPLE_PLAN_1X3


def scripted_providers(script, seed=0, **kwargs):
    return mock_provider_set(seed=seed, script=script, **kwargs)


class RecordingChat:
    """Delegates to the deterministic mock while keeping rendered prompts."""

    def __init__(self, seed=0):
        self.inner = DeterministicChatMock(seed)
        self.prompts: list[tuple[str, str]] = []

    def complete(self, template_id, prompt, variables, images):
        self.prompts.append((template_id, prompt))
        return self.inner.complete(template_id, prompt, variables, images)


FIVE_DOCS = [
    CorpusDoc(id=f"doc-{i}", title=f"City {i}", body=body)
    for i, body in enumerate(
        [
            "A dense port city with canals and a radial core.",
            "Sprawling desert city organized along one axis.",
            "Compact alpine town with terraced housing.",
            "Industrial riverside city with rail yards.",
            "Coastal resort strip with low-rise hotels.",
        ]
    )
]


class TestRetrieval:
    def test_single_doc_corpus(self):
        providers = mock_provider_set(seed=1)
        summary = retrieve_reference_summary(FIVE_DOCS[:1], "port city", providers, k=1)
        assert summary.source_doc_ids == ["doc-0"]
        assert summary.traits

    def test_topk_matches_exhaustive_ranking(self):
        providers = mock_provider_set(seed=3)
        query = providers.embed("New York-like")
        ranked = sorted(
            FIVE_DOCS, key=lambda d: (-cosine(query, providers.embed(d.body)), d.id)
        )
        expected = [d.id for d in ranked[:2]]
        summary = retrieve_reference_summary(FIVE_DOCS, "New York-like", providers, k=2)
        assert summary.source_doc_ids == expected

    def test_ties_break_by_doc_id(self):
        providers = mock_provider_set(seed=0, embed=ConstantEmbedMock())
        summary = retrieve_reference_summary(FIVE_DOCS, "anything", providers, k=3)
        assert summary.source_doc_ids == ["doc-0", "doc-1", "doc-2"]

    def test_traits_nonempty_and_capped(self):
        long_response = "t" * 5000
        providers = scripted_providers({"reference_distill": [long_response]})
        summary = retrieve_reference_summary(
            FIVE_DOCS, "New York-like", providers, k=2, max_traits_chars=1200
        )
        assert 0 < len(summary.traits) <= 1200

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            retrieve_reference_summary([], "x", mock_provider_set(seed=0), k=1)

    def test_bad_k(self):
        with pytest.raises(ValueError):
            retrieve_reference_summary(FIVE_DOCS, "x", mock_provider_set(seed=0), k=0)


class TestGlobalPlan:
    def test_template_example_response(self):
        response = "```json\n" + json.dumps(EXAMPLE_PLAN_1X3) + "\n```"
        providers = scripted_providers({"global_planner": [response]})
        outcome = global_plan(PlanRequest(prompt="a small town"), providers)
        assert (outcome.layout.rows, outcome.layout.cols) == (1, 3)
        assert len(outcome.layout.districts) == 2
        assert outcome.attempts == 1

    def test_forced_size_overrides_model_size(self):
        plan = {
            "Grid Size": "9 X 9",
            "Areas": {
                "A": {"Description": "", "Grid Index": [1, 2, 3]},
                "B": {"Description": "", "Grid Index": [4, 5, 6]},
            },
        }
        providers = scripted_providers({"global_planner": [json.dumps(plan)]})
        outcome = global_plan(
            PlanRequest(prompt="anything", forced_size=(2, 3)), providers
        )
        assert (outcome.layout.rows, outcome.layout.cols) == (2, 3)

    def test_forced_size_stated_in_prompt(self):
        chat = RecordingChat(seed=0)
        providers = mock_provider_set(seed=0, chat=chat)
        global_plan(PlanRequest(prompt="plain city", forced_size=(2, 3)), providers)
        template_id, prompt = chat.prompts[0]
        assert template_id == "global_planner"
        assert "2 X 3" in prompt

    def test_retry_then_success_records_attempts(self):
        overlapping = {
            "Grid Size": "1x2",
            "Areas": {
                "A": {"Description": "", "Grid Index": [1, 2]},
                "B": {"Description": "", "Grid Index": [2]},
            },
        }
        good = {
            "Grid Size": "1x2",
            "Areas": {
                "A": {"Description": "", "Grid Index": [1]},
                "B": {"Description": "", "Grid Index": [2]},
            },
        }
        providers = scripted_providers(
            {"global_planner": [json.dumps(overlapping), json.dumps(good)]}
        )
        outcome = global_plan(PlanRequest(prompt="x"), providers, retries=2)
        assert outcome.attempts == 2

    def test_all_attempts_invalid(self):
        bad = "not json at all"
        providers = scripted_providers({"global_planner": [bad, bad, bad]})
        with pytest.raises(PlanValidationError) as exc:
            global_plan(PlanRequest(prompt="x"), providers, retries=2)
        assert exc.value.last_error is not None
        assert providers.stats.count("chat", "global_planner") == 3

    def test_summary_injected_into_prompt(self):
        chat = RecordingChat(seed=0)
        providers = mock_provider_set(seed=0, chat=chat)
        summary = ReferenceSummary(city="X", traits="ring roads and a dense core")
        global_plan(PlanRequest(prompt="a city like X"), providers, summary=summary)
        assert "ring roads and a dense core" in chat.prompts[0][1]

    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            PlanRequest(prompt="   ")


class TestLocalDesign:
    def _layout(self):
        from cityforge.model import validate_layout

        return validate_layout(EXAMPLE_PLAN_1X3)

    def test_template_example_response(self):
        layout = self._layout()
        response = json.dumps(
            {
                "1": "A cluster of mid-rise residential buildings with gray facades.",
                "2": "A continuation of the residential district with taller buildings.",
            }
        )
        providers = scripted_providers({"local_designer": [response]})
        result = local_design(
            layout, layout.districts["residential-district"], "a town", providers
        )
        assert sorted(result) == [1, 2]
        assert result[1].text.startswith("A cluster")

    def test_single_cell_district(self):
        layout = self._layout()
        providers = mock_provider_set(seed=4)
        result = local_design(
            layout, layout.districts["commercial-center"], "a town", providers
        )
        assert sorted(result) == [3]
        assert result[3].text

    def test_missing_key_reported(self):
        from cityforge.model import validate_layout

        layout = validate_layout(
            {
                "Grid Size": "1x5",
                "Areas": {
                    "Head": {"Description": "", "Grid Index": [1, 2, 3]},
                    "Tail": {"Description": "", "Grid Index": [4, 5]},
                },
            }
        )
        short = json.dumps({"4": "only four"})
        providers = scripted_providers({"local_designer": [short, short, short]})
        with pytest.raises(DesignValidationError) as exc:
            local_design(layout, layout.districts["tail"], "p", providers, retries=2)
        assert exc.value.missing == {5}
        assert exc.value.extra == set()

    def test_extra_key_reported(self):
        layout = self._layout()
        bad = json.dumps({"3": "ok", "9": "stray"})
        providers = scripted_providers({"local_designer": [bad, bad, bad]})
        with pytest.raises(DesignValidationError) as exc:
            local_design(
                layout, layout.districts["commercial-center"], "p", providers, retries=2
            )
        assert exc.value.extra == {9}

    def test_empty_value_retried_then_fails(self):
        layout = self._layout()
        empty = json.dumps({"3": "   "})
        providers = scripted_providers({"local_designer": [empty, empty, empty]})
        with pytest.raises(DesignValidationError) as exc:
            local_design(
                layout, layout.districts["commercial-center"], "p", providers, retries=2
            )
        assert exc.value.missing == {3}

    def test_foreign_district_rejected(self):
        layout = self._layout()
        from cityforge.model import DistrictBlueprint

        stranger = DistrictBlueprint("ghost", "Ghost", "", [1])
        with pytest.raises(ValueError):
            local_design(layout, stranger, "p", mock_provider_set(seed=0))


class TestDesignCity:
    def test_example_layout_covered(self):
        from cityforge.model import validate_layout

        layout = validate_layout(EXAMPLE_PLAN_1X3)
        result = design_city(layout, "a town", mock_provider_set(seed=0))
        assert sorted(result) == [1, 2, 3]

    def test_single_district_single_call(self):
        from cityforge.model import validate_layout

        layout = validate_layout(
            {"Grid Size": "2x2", "Areas": {"All": {"Description": "", "Grid Index": [1, 2, 3, 4]}}}
        )
        providers = mock_provider_set(seed=0)
        result = design_city(layout, "p", providers)
        assert len(result) == 4
        assert providers.stats.count("chat", "local_designer") == 1

    def test_three_districts_three_calls(self):
        from cityforge.model import validate_layout

        layout = validate_layout(
            {
                "Grid Size": "2x3",
                "Areas": {
                    "A": {"Description": "", "Grid Index": [1, 2]},
                    "B": {"Description": "", "Grid Index": [3, 6]},
                    "C": {"Description": "", "Grid Index": [4, 5]},
                },
            }
        )
        providers = mock_provider_set(seed=0)
        result = design_city(layout, "p", providers)
        assert len(result) == 6
        assert providers.stats.count("chat", "local_designer") == 3


class TestDeterminism:
    def test_same_seed_same_bytes(self):
        def run():
            providers = mock_provider_set(seed=11)
            outcome = global_plan(PlanRequest(prompt="a lakeside city"), providers)
            descriptions = design_city(outcome.layout, "a lakeside city", providers)
            return canonical_json(layout_to_dict(outcome.layout)) + canonical_json(
                {str(i): d.text for i, d in descriptions.items()}
            )

        assert run() == run()

    def test_different_seed_may_differ_but_still_valid(self):
        providers = mock_provider_set(seed=12)
        outcome = global_plan(PlanRequest(prompt="a lakeside city"), providers)
        assert outcome.layout.rows >= 1
