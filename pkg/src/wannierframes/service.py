"""HTTP facade over the pipeline.

Two endpoints: ``GET /scenarios`` lists the bundled demonstration runs,
``POST /run`` executes one run and returns the full report plus rendered
artifact files inline.  A run whose verification checks fail is still a
successful HTTP exchange (200 with ``passed = false``); only malformed
requests (400) and runs that cannot produce a frame at all (409) map to
error statuses.  The ``exit_code`` field always carries the process-level
code the CLI would exit with, so remote and in-process runs agree.
"""

from __future__ import annotations

import dataclasses
from typing import Any, Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import pipeline
from .errors import (
    ConfigError,
    DegenerateFamily,
    EigensolveFailure,
    GapViolation,
    IllConditioned,
    InvalidSpec,
    NotTwoDimensional,
    ObstructionDetected,
    SizeMismatch,
    SpanningFailure,
    SupercellTooSmall,
    UnresolvedField,
)
from .models import ModelSpec

_CONFIG_ERRORS = (ConfigError, InvalidSpec, SizeMismatch, SupercellTooSmall)
_CONSTRUCTION_ERRORS = (
    ObstructionDetected,
    SpanningFailure,
    IllConditioned,
    DegenerateFamily,
    UnresolvedField,
    EigensolveFailure,
    NotTwoDimensional,
)


class ModelBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    parameters: dict[str, Any] = Field(default_factory=dict)


class RunRequest(BaseModel):
    """Either a scenario name (with optional overrides) or a full config."""

    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    scenario: str | None = None
    model: ModelBody | None = None
    grid: list[int] | None = None
    first_band: int = 1
    last_band: int = 1
    construction: Literal["auto", "orthonormal", "tightFrame", "control"] | None = None
    l_override: int | None = None
    seed_strategy: str = "canonicalBasis"
    trials: int = 50
    rng_seed: int | None = None
    min_gap: float = 0.0
    tolerances: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _scenario_xor_model(self) -> "RunRequest":
        if self.scenario is None and self.model is None:
            raise ValueError("request must set 'scenario' or 'model'")
        if self.scenario is not None and self.model is not None:
            raise ValueError("'scenario' and 'model' are mutually exclusive")
        if self.scenario is None and self.grid is None:
            raise ValueError("explicit model runs must set 'grid'")
        return self

    def to_config(self) -> pipeline.PipelineConfig:
        if self.scenario is not None:
            config = pipeline.scenario_config(
                self.scenario,
                grid=tuple(self.grid) if self.grid is not None else None,
                construction=self.construction,
                rng_seed=self.rng_seed,
                l_override=self.l_override,
            )
            if self.tolerances:
                config = dataclasses.replace(
                    config, tolerances={**config.tolerances, **self.tolerances}
                )
            return config
        assert self.model is not None and self.grid is not None
        return pipeline.PipelineConfig(
            model=ModelSpec(self.model.kind, dict(self.model.parameters)),
            grid=tuple(self.grid),
            first_band=self.first_band,
            last_band=self.last_band,
            construction=self.construction or "auto",
            l_override=self.l_override,
            seed_strategy=self.seed_strategy,
            trials=self.trials,
            rng_seed=self.rng_seed if self.rng_seed is not None else 0,
            min_gap=self.min_gap,
            tolerances=dict(self.tolerances),
        )


class RunResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    passed: bool
    exit_code: int
    report: dict
    artifacts: dict[str, str]


class ScenarioInfo(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    description: str
    expected_verdict: str


def create_app() -> FastAPI:
    app = FastAPI(
        title="wannierframes",
        description="Localized Wannier bases and tight frames for "
        "gap-isolated bands of periodic operators.",
    )

    @app.get("/scenarios", response_model=list[ScenarioInfo])
    def scenarios() -> list[ScenarioInfo]:
        return [ScenarioInfo(**row) for row in pipeline.list_scenarios()]

    @app.post("/run", response_model=RunResponse)
    def run(request: RunRequest) -> RunResponse:
        try:
            config = request.to_config()
            result = pipeline.run_pipeline(config)
        except _CONFIG_ERRORS as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__, "message": str(exc), "exit_code": 2},
            ) from exc
        except GapViolation as exc:
            raise HTTPException(
                status_code=409,
                detail={"error": "GapViolation", "message": str(exc), "exit_code": 3},
            ) from exc
        except _CONSTRUCTION_ERRORS as exc:
            raise HTTPException(
                status_code=409,
                detail={"error": type(exc).__name__, "message": str(exc), "exit_code": 4},
            ) from exc
        return RunResponse(
            passed=result.passed,
            exit_code=result.exit_code,
            report=result.report,
            artifacts=result.artifacts,
        )

    return app


app = create_app()
