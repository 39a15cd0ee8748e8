"""Exception types shared across the engine."""

from __future__ import annotations


class CityForgeError(Exception):
    """Base class for all engine errors."""


class ParseError(CityForgeError):
    """A structured text field (e.g. a grid-size string) could not be parsed."""


class OverlapError(CityForgeError):
    """Two or more districts claim the same grid index."""

    def __init__(self, index: int, districts: tuple[str, ...]):
        self.index = index
        self.districts = tuple(sorted(districts))
        super().__init__(f"grid index {index} claimed by districts {self.districts}")


class CoverageError(CityForgeError):
    """Some grid indices of the plan rectangle are claimed by no district."""

    def __init__(self, indices: tuple[int, ...]):
        self.indices = tuple(sorted(indices))
        super().__init__(f"grid indices not covered by any district: {self.indices}")


class EmptyCorpusError(CityForgeError):
    """Reference retrieval was asked to run over an empty corpus."""


class TemplateError(CityForgeError):
    """A prompt template is missing or has unbound placeholders."""


class TransientProviderError(CityForgeError):
    """A provider call failed in a retryable way (timeout, rate limit, 5xx)."""


class ProviderError(CityForgeError):
    """A provider call failed permanently, after the retry policy ran out."""


class PlanValidationError(CityForgeError):
    """The global plan stayed invalid after all retries."""

    def __init__(self, message: str, last_error: Exception | None = None):
        self.last_error = last_error
        super().__init__(message)


class DesignValidationError(CityForgeError):
    """A local design response did not cover the district's grid indices."""

    def __init__(self, district_id: str, missing: set[int], extra: set[int]):
        self.district_id = district_id
        self.missing = set(missing)
        self.extra = set(extra)
        super().__init__(
            f"design for district {district_id!r} invalid: "
            f"missing={sorted(self.missing)} extra={sorted(self.extra)}"
        )


class VerdictParseError(CityForgeError):
    """Evaluator output did not contain a well-formed Score/Reason/Rewrite block."""


class GeometryError(CityForgeError):
    """A mesh bounding box or transform input is degenerate."""


class ExpansionInferenceError(CityForgeError):
    """The expansion response stayed unparsable or referenced unknown districts."""


class NoCandidateError(CityForgeError):
    """The frontier candidate set is empty."""


class OccupiedError(CityForgeError):
    """The selected expansion cell is already occupied."""


class EmbeddingError(CityForgeError):
    """An embedding is unusable (zero norm or dimension mismatch)."""


class RoadError(CityForgeError):
    """An explicit road connection joins cells that are not 4-adjacent."""


class IncompleteCityError(CityForgeError):
    """Assembly was requested while some tiles have no finished asset."""

    def __init__(self, indices: tuple[int, ...]):
        self.indices = tuple(sorted(indices))
        super().__init__(f"tiles without finished assets: {self.indices}")


class PipelineError(CityForgeError):
    """A pipeline stage failed; completed artifacts are kept for resume."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
