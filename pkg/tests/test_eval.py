import pytest

from cityforge.config import EngineConfig
from cityforge.evalharness import (
    DIMENSIONS,
    DimensionTally,
    format_report,
    ingest_votes,
    run_eval,
)
from cityforge.orchestrator import run_pipeline
from cityforge.providers.mocks import mock_provider_set
from cityforge.store import ProjectStore

CFG = EngineConfig(seed=7, mock=True)


@pytest.fixture(scope="module")
def two_projects(tmp_path_factory):
    root = tmp_path_factory.mktemp("eval")
    stores = []
    for name, seed in (("a", 7), ("b", 8)):
        store = ProjectStore(root / name)
        run_pipeline("a modern city", store, mock_provider_set(seed=seed), CFG)
        stores.append(store)
    return stores


def judge_script(votes):
    return {"eval_judge": list(votes)}


class TestWinRates:
    def test_always_a_judge(self, two_projects):
        store_a, store_b = two_projects
        providers = mock_provider_set(seed=7, script=judge_script(["A"] * 10))
        report = run_eval(store_a, store_b, providers, CFG, repeats=2)
        for dimension in DIMENSIONS:
            stats = report["dimensions"][dimension]
            assert stats == {
                "wins_a": 2,
                "wins_b": 0,
                "invalid": 0,
                "total": 2,
                "rate_a": 1.0,
                "rate_b": 0.0,
            }

    def test_alternating_judge_splits_evenly(self, two_projects):
        store_a, store_b = two_projects
        providers = mock_provider_set(seed=7, script=judge_script(["A", "B"] * 5))
        report = run_eval(store_a, store_b, providers, CFG, repeats=2)
        for dimension in DIMENSIONS:
            stats = report["dimensions"][dimension]
            assert stats["rate_a"] == 0.5
            assert stats["rate_b"] == 0.5

    def test_invalid_votes_excluded_from_rates(self, two_projects):
        store_a, store_b = two_projects
        providers = mock_provider_set(
            seed=7, script=judge_script(["A", "this one is a tie"] * 5)
        )
        report = run_eval(store_a, store_b, providers, CFG, repeats=2)
        for dimension in DIMENSIONS:
            stats = report["dimensions"][dimension]
            assert stats["invalid"] == 1
            assert stats["wins_a"] + stats["wins_b"] + stats["invalid"] == stats["total"]
            assert stats["rate_a"] == 1.0

    def test_repeat_twice_doubles_comparisons(self, two_projects):
        store_a, store_b = two_projects
        once = run_eval(
            store_a, store_b, mock_provider_set(seed=7, script=judge_script(["A"] * 5)),
            CFG, repeats=1,
        )
        twice = run_eval(
            store_a, store_b, mock_provider_set(seed=7, script=judge_script(["A"] * 10)),
            CFG, repeats=2,
        )
        for dimension in DIMENSIONS:
            assert once["dimensions"][dimension]["total"] == 1
            assert twice["dimensions"][dimension]["total"] == 2

    def test_judge_called_once_per_dimension_per_repeat(self, two_projects):
        store_a, store_b = two_projects
        providers = mock_provider_set(seed=7, script=judge_script(["A"] * 10))
        run_eval(store_a, store_b, providers, CFG, repeats=2)
        assert providers.stats.count("chat", "eval_judge") == len(DIMENSIONS) * 2

    def test_rates_sum_to_one_over_valid(self, two_projects):
        store_a, store_b = two_projects
        providers = mock_provider_set(seed=13)  # deterministic pseudo-random judge
        report = run_eval(store_a, store_b, providers, CFG, repeats=2)
        for stats in report["dimensions"].values():
            if stats["wins_a"] + stats["wins_b"]:
                assert stats["rate_a"] + stats["rate_b"] == pytest.approx(1.0)


class TestAlignment:
    def test_scripted_alignment_scores(self, two_projects):
        store_a, store_b = two_projects
        # 6 tiles per project; a-scores then b-scores
        script = {
            "eval_judge": ["A"] * 10,
            "alignment_query": ["0.8"] * 6 + ["0.6"] * 6,
        }
        providers = mock_provider_set(seed=7, script=script)
        report = run_eval(store_a, store_b, providers, CFG, repeats=2)
        assert report["alignment"]["a"]["mean"] == pytest.approx(0.8)
        assert report["alignment"]["b"]["mean"] == pytest.approx(0.6)
        assert report["alignment"]["a"]["count"] == 6

    def test_unparsable_alignment_marked_invalid(self, two_projects):
        store_a, store_b = two_projects
        script = {
            "eval_judge": ["A"] * 10,
            "alignment_query": ["definitely aligned"] + ["0.5"] * 11,
        }
        providers = mock_provider_set(seed=7, script=script)
        report = run_eval(store_a, store_b, providers, CFG, repeats=2)
        assert report["alignment"]["a"]["invalid"] == 1
        assert report["alignment"]["a"]["count"] == 5


class TestHumanVotes:
    def test_csv_ingestion(self, tmp_path):
        votes = tmp_path / "votes.csv"
        votes.write_text(
            "comparison-id,dimension,vote\n"
            "c1,Geometric Fidelity,A\n"
            "c1,Geometric Fidelity,B\n"
            "c2,Texture Clarity,A\n"
            "c3,Texture Clarity,tie\n"
        )
        tallies = ingest_votes(votes)
        assert tallies["Geometric Fidelity"].wins_a == 1
        assert tallies["Geometric Fidelity"].wins_b == 1
        assert tallies["Texture Clarity"].invalid == 1

    def test_report_includes_human_section(self, two_projects, tmp_path):
        votes = tmp_path / "votes.csv"
        votes.write_text("c1,Overall Realism,A\n")
        store_a, store_b = two_projects
        providers = mock_provider_set(seed=7, script=judge_script(["B"] * 10))
        report = run_eval(store_a, store_b, providers, CFG, repeats=2, human_votes=votes)
        assert report["human"]["Overall Realism"]["wins_a"] == 1


class TestReportFormat:
    def test_table_mirrors_dimension_columns(self, two_projects):
        store_a, store_b = two_projects
        providers = mock_provider_set(seed=7, script=judge_script(["A"] * 10))
        text = format_report(run_eval(store_a, store_b, providers, CFG, repeats=2))
        for dimension in (
            "Geometric Fidelity",
            "Texture Clarity",
            "Layout Coherence",
            "Scene Coverage",
            "Overall Realism",
        ):
            assert dimension in text

    def test_tally_identity(self):
        tally = DimensionTally()
        for vote in ["A", "B", "b", " a ", "nonsense", ""]:
            tally.add(vote)
        assert tally.wins_a == 2
        assert tally.wins_b == 2
        assert tally.invalid == 2
        assert tally.total == 6
