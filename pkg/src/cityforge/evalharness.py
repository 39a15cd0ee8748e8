"""Pairwise evaluation harness.

Compares two generated cities with judge-provider calls: five visual-quality
dimensions as A/B pairwise votes (each comparison repeated to damp
randomness), plus per-tile alignment queries scored 0..1. Judge output that is
not a bare "A" or "B" counts as invalid and is excluded from the win rates.
Human panel votes can be ingested from a CSV and aggregated the same way.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .config import EngineConfig
from .model import index_of
from .orchestrator import compose_render
from .providers import ProviderSet
from .store import ProjectStore

DIMENSIONS = (
    "Geometric Fidelity",
    "Texture Clarity",
    "Layout Coherence",
    "Scene Coverage",
    "Overall Realism",
)


@dataclass
class DimensionTally:
    wins_a: int = 0
    wins_b: int = 0
    invalid: int = 0

    @property
    def total(self) -> int:
        return self.wins_a + self.wins_b + self.invalid

    @property
    def valid(self) -> int:
        return self.wins_a + self.wins_b

    def add(self, vote: str) -> None:
        vote = vote.strip().upper()
        if vote == "A":
            self.wins_a += 1
        elif vote == "B":
            self.wins_b += 1
        else:
            self.invalid += 1

    def to_dict(self) -> dict:
        valid = self.valid
        return {
            "wins_a": self.wins_a,
            "wins_b": self.wins_b,
            "invalid": self.invalid,
            "total": self.total,
            "rate_a": self.wins_a / valid if valid else 0.0,
            "rate_b": self.wins_b / valid if valid else 0.0,
        }


@dataclass
class AlignmentTally:
    scores: list[float] = field(default_factory=list)
    invalid: int = 0

    def add(self, raw: str) -> None:
        try:
            value = float(raw.strip())
        except ValueError:
            self.invalid += 1
            return
        if not 0.0 <= value <= 1.0:
            self.invalid += 1
            return
        self.scores.append(value)

    def to_dict(self) -> dict:
        return {
            "mean": sum(self.scores) / len(self.scores) if self.scores else 0.0,
            "count": len(self.scores),
            "invalid": self.invalid,
        }


def run_eval(
    store_a: ProjectStore,
    store_b: ProjectStore,
    providers: ProviderSet,
    config: EngineConfig,
    repeats: int = 2,
    human_votes: str | Path | None = None,
) -> dict:
    """Full comparison of two project stores; returns the report dict."""
    project_a = store_a.load_project()
    project_b = store_b.load_project()
    render_a = compose_render(project_a, store_a)
    render_b = compose_render(project_b, store_b)
    instruction = project_a.prompt

    dimensions: dict[str, DimensionTally] = {}
    for dimension in DIMENSIONS:
        tally = DimensionTally()
        for _repeat in range(repeats):
            raw = providers.chat(
                "eval_judge",
                {"dimension": dimension, "city_instruction": instruction},
                images=[render_a, render_b],
            )
            tally.add(raw)
        dimensions[dimension] = tally

    alignment = {}
    for label, project, store in (("a", project_a, store_a), ("b", project_b, store_b)):
        tally = AlignmentTally()
        for cell in project.layout.occupied():
            image = store.read_tile_image(index_of(cell, project.layout.cols))
            if image is None:
                tally.invalid += 1
                continue
            raw = providers.chat(
                "alignment_query", {"city_instruction": project.prompt}, images=[image]
            )
            tally.add(raw)
        alignment[label] = tally.to_dict()

    report = {
        "instruction": instruction,
        "repeats": repeats,
        "dimensions": {d: t.to_dict() for d, t in dimensions.items()},
        "alignment": alignment,
    }
    if human_votes is not None:
        report["human"] = {
            d: t.to_dict() for d, t in ingest_votes(human_votes).items()
        }
    return report


def ingest_votes(path: str | Path) -> dict[str, DimensionTally]:
    """Read a human-vote CSV (comparison-id, dimension, vote) into tallies."""
    tallies: dict[str, DimensionTally] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if len(row) < 3 or row[0].strip().lower() in ("comparison-id", "comparison_id"):
                continue
            dimension = row[1].strip()
            tallies.setdefault(dimension, DimensionTally()).add(row[2])
    return tallies


def format_report(report: dict) -> str:
    """Plain-text win-rate table, one row per visual-quality dimension."""
    lines = [
        f"City instruction: {report['instruction']}",
        f"Comparisons repeated {report['repeats']}x per dimension",
        "",
        f"{'Dimension':<22} {'A wins':>7} {'B wins':>7} {'invalid':>8} {'A rate':>8} {'B rate':>8}",
    ]
    for dimension in DIMENSIONS:
        stats = report["dimensions"][dimension]
        lines.append(
            f"{dimension:<22} {stats['wins_a']:>7} {stats['wins_b']:>7} "
            f"{stats['invalid']:>8} {stats['rate_a']:>8.1%} {stats['rate_b']:>8.1%}"
        )
    lines.append("")
    lines.append(
        "Alignment mean: A={:.4f} (n={}), B={:.4f} (n={})".format(
            report["alignment"]["a"]["mean"],
            report["alignment"]["a"]["count"],
            report["alignment"]["b"]["mean"],
            report["alignment"]["b"]["count"],
        )
    )
    if "human" in report:
        lines.append("")
        lines.append("Human votes:")
        for dimension, stats in report["human"].items():
            lines.append(
                f"  {dimension:<20} A={stats['wins_a']} B={stats['wins_b']} "
                f"invalid={stats['invalid']}"
            )
    return "\n".join(lines)
