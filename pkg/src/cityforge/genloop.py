"""Per-tile produce-refine-evaluate image loop and image-to-3D lifting.

Each tile runs the loop independently: generate an isometric image anchored
on a ground platform, edit the platform away, score the result. A verdict at
or above the threshold ends the loop; below it, the verdict's rewrite becomes
the next generation instruction. After the iteration cap the best-scoring
iteration wins and the job is flagged below-threshold instead of failing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Protocol

from .errors import CityForgeError, GeometryError, VerdictParseError
from .providers import MeshAsset, ProviderSet

_SCORE_RE = re.compile(r"^\s*Score:\s*\[?\s*(-?\d+)\s*\]?\s*$", re.MULTILINE)
_REASON_RE = re.compile(r"^\s*Reason:\s*(.*)$", re.MULTILINE)
_REWRITE_RE = re.compile(r"^\s*Rewrite:\s*(.*)", re.MULTILINE | re.DOTALL)


@dataclass
class LoopConfig:
    score_threshold: int = 6
    max_iterations: int = 3


@dataclass
class EvalVerdict:
    score: int
    reason: str
    rewrite: str
    raw: str = ""


@dataclass
class IterationRecord:
    iteration: int
    prompt_used: str
    produced_image: bytes
    refined_image: bytes
    verdict: EvalVerdict


@dataclass
class TileJob:
    index: int
    description: str
    city_prompt: str
    iterations: list[IterationRecord] = field(default_factory=list)
    final_image: bytes | None = None
    mesh: MeshAsset | None = None
    status: str = "pending"
    below_threshold: bool = False
    error: str | None = None


class TileSink(Protocol):
    """Receives loop artifacts as they are produced (the store implements it)."""

    def write_iteration(
        self, index: int, iteration: int, produced: bytes, refined: bytes, verdict_text: str
    ) -> None: ...

    def write_final(self, index: int, image: bytes, mesh: MeshAsset) -> None: ...


def parse_verdict(text: str) -> EvalVerdict:
    """Extract the labeled Score / Reason / Rewrite lines of evaluator output."""
    score_match = _SCORE_RE.search(text)
    if not score_match:
        raise VerdictParseError(f"no integer 'Score:' line in {text[:120]!r}")
    score = int(score_match.group(1))
    if not 0 <= score <= 10:
        raise VerdictParseError(f"score {score} outside [0, 10]")
    reason_match = _REASON_RE.search(text)
    rewrite_match = _REWRITE_RE.search(text)
    return EvalVerdict(
        score=score,
        reason=reason_match.group(1).strip() if reason_match else "",
        rewrite=rewrite_match.group(1).strip() if rewrite_match else "",
        raw=text,
    )


def produce(description: str, city_prompt: str, providers: ProviderSet) -> bytes:
    """Platform-anchored isometric generation for one tile."""
    if not description.strip():
        raise ValueError("description must be nonempty")
    return providers.generate_image(
        "image_generate",
        {"city_instruction": city_prompt, "grid_description": description},
    )


def refine(image: bytes, providers: ProviderSet) -> bytes:
    """Platform removal and surface cleanup on a produced image."""
    if not image:
        raise ValueError("image must be nonempty")
    return providers.edit_image("image_refine", {}, image)


def evaluate(image: bytes, description: str, providers: ProviderSet) -> EvalVerdict:
    """Score the refined image against the tile's grid description."""
    text = providers.chat(
        "image_evaluate", {"grid_description": description}, images=[image]
    )
    return parse_verdict(text)


def lift_to_3d(image: bytes, providers: ProviderSet) -> MeshAsset:
    """Convert the final tile image to a mesh; the bbox drives assembly scaling."""
    if not image:
        raise ValueError("image must be nonempty")
    mesh = providers.image_to_mesh(image)
    if min(mesh.bbox) <= 0.0:
        raise GeometryError(f"degenerate mesh bounding box {mesh.bbox}")
    return mesh


def run_loop(
    job: TileJob,
    providers: ProviderSet,
    config: LoopConfig | None = None,
    sink: TileSink | None = None,
) -> TileJob:
    """Run the image loop for one tile, then lift the winner to 3D."""
    if job.status != "pending":
        raise ValueError(f"job {job.index} is {job.status}, expected pending")
    config = config or LoopConfig()
    job.status = "running"
    instruction = job.description
    accepted: IterationRecord | None = None
    try:
        for iteration in range(1, config.max_iterations + 1):
            produced = produce(instruction, job.city_prompt, providers)
            refined = refine(produced, providers)
            verdict = evaluate(refined, job.description, providers)
            record = IterationRecord(
                iteration=iteration,
                prompt_used=instruction,
                produced_image=produced,
                refined_image=refined,
                verdict=verdict,
            )
            job.iterations.append(record)
            if sink is not None:
                sink.write_iteration(
                    job.index, iteration, produced, refined, verdict.raw or str(verdict)
                )
            if verdict.score >= config.score_threshold:
                accepted = record
                break
            if not verdict.rewrite.strip():
                raise VerdictParseError(
                    f"verdict below threshold ({verdict.score}) carries no rewrite"
                )
            instruction = verdict.rewrite
        if accepted is None:
            accepted = max(job.iterations, key=lambda r: (r.verdict.score, -r.iteration))
            job.below_threshold = True
        job.final_image = accepted.refined_image
        job.mesh = lift_to_3d(accepted.refined_image, providers)
        if sink is not None:
            sink.write_final(job.index, job.final_image, job.mesh)
        job.status = "done"
    except CityForgeError as exc:
        job.status = "failed"
        job.error = str(exc)
    return job
