"""Config-driven end-to-end runs: model to verified Wannier report.

The stages are fixed: build the operator family, diagonalize on the
requested momentum grid, certify the band window, form the spectral
projectors (re-expressed through the family's frame map when present),
classify the bundle, construct sections according to the requested mode,
synthesize Wannier functions, and verify.  The construction modes are

* ``auto`` -- follow the topology verdict: trivial bundles get the
  parallel-transport orthonormal basis (l = m), obstructed ones the
  projected-seed tight frame with l escalated from m + 1 until the seeds
  span every fiber (bounded by min(2^n m, N)).
* ``orthonormal`` -- force the parallel-transport path; on an obstructed
  bundle this fails with ObstructionDetected.
* ``tightFrame`` -- force the projected-seed path (l from ``l_override``
  or m + 1).
* ``control`` -- the deliberately discontinuous per-point gauge; its
  report documents slow decay instead of gating on it.

Verification checks (each reported with value, tolerance, verdict):
transform norm consistency, spectral membership, pointwise frame
identity, Parseval over random band members, orthonormality when l = m,
and the exponential-decay fit.  The frame-identity and Parseval checks
must agree; their agreement is itself a check.  Exit codes: 0 all
enabled checks pass, 1 check failure, 2 bad configuration, 3 gap
violation, 4 construction failure.
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
import time
from typing import Any

import numpy as np

from .bloch import KGrid
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
from .gauge import (
    KIND_ORTHONORMAL,
    canonical_tight_frame,
    discontinuous_control_gauge,
    frame_identity_residual,
    gram_identity_residual,
    membership_residual,
    parallel_transport_gauge,
    seed_sections,
)
from .models import ModelSpec, build_model
from .spectral import (
    apply_frame_map,
    band_structure,
    projector_field,
    select_bands,
)
from .topology import triviality_verdict
from .wannier import decay_profile, parseval_check, plancherel_residual, synthesize_wannier

CONSTRUCTION_MODES = ("auto", "orthonormal", "tightFrame", "control")
SEED_STRATEGIES = ("canonicalBasis", "randomDeterministic")

DEFAULT_TOLERANCES = {
    "plancherel": 1e-12,
    "membership": 1e-9,
    "frame_identity": 1e-10,
    "orthonormality": 1e-10,
    "parseval": 1e-8,
    "decay_r2": 0.99,
}

REPORT_FORMAT = 1


@dataclasses.dataclass(frozen=True)
class PipelineConfig:
    """Validated description of one pipeline run."""

    model: ModelSpec
    grid: tuple[int, ...]
    first_band: int = 1
    last_band: int = 1
    construction: str = "auto"
    l_override: int | None = None
    seed_strategy: str = "canonicalBasis"
    trials: int = 50
    rng_seed: int = 0
    min_gap: float = 0.0
    tolerances: dict = dataclasses.field(default_factory=dict)
    scenario: str | None = None

    def validated_tolerances(self) -> dict:
        merged = dict(DEFAULT_TOLERANCES)
        for key, value in self.tolerances.items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(
                    f"unknown tolerance '{key}'; expected one of "
                    f"{sorted(DEFAULT_TOLERANCES)}"
                )
            merged[key] = float(value)
        return merged

    def validate(self) -> None:
        if self.construction not in CONSTRUCTION_MODES:
            raise ConfigError(
                f"construction must be one of {CONSTRUCTION_MODES}, "
                f"got '{self.construction}'"
            )
        if self.seed_strategy not in SEED_STRATEGIES:
            raise ConfigError(
                f"seed strategy must be one of {SEED_STRATEGIES}, "
                f"got '{self.seed_strategy}'"
            )
        if not self.grid or any(int(m) < 1 for m in self.grid):
            raise ConfigError(f"grid sizes must be positive integers, got {self.grid}")
        if not (1 <= self.first_band <= self.last_band):
            raise ConfigError(
                f"band window [{self.first_band}, {self.last_band}] is not a "
                f"1-based nonempty interval"
            )
        if self.l_override is not None and self.l_override < 1:
            raise ConfigError(f"l override must be >= 1, got {self.l_override}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        self.validated_tolerances()


@dataclasses.dataclass(frozen=True)
class Scenario:
    """A bundled, fully pinned demonstration run."""

    name: str
    description: str
    expected_verdict: str
    config: PipelineConfig


def _scenario_table() -> dict[str, Scenario]:
    cosine = ModelSpec(
        "schrodinger1d",
        {"g_max": 8, "potential": {1: 3.5, -1: 3.5}},
    )
    haldane_trivial = ModelSpec(
        "haldane", {"t2": 1.0 / 3.0, "m_onsite": 5.0}
    )
    haldane_topological = ModelSpec(
        "haldane", {"t2": 0.3, "m_onsite": 0.2}
    )
    hofstadter = ModelSpec("hofstadter", {"p": 1, "q": 3})
    rows = [
        Scenario(
            name="1d-cosine-band1",
            description="Lowest band of a 1D cosine-potential Schrodinger "
            "operator; trivial bundle, single exponentially localized "
            "orthonormal Wannier function.",
            expected_verdict="trivial",
            config=PipelineConfig(model=cosine, grid=(64,), scenario="1d-cosine-band1"),
        ),
        Scenario(
            name="haldane-trivial-band1",
            description="Haldane lower band deep in the trivial phase "
            "(large sublattice mass); Chern 0, orthonormal Wannier basis.",
            expected_verdict="trivial",
            config=PipelineConfig(
                model=haldane_trivial, grid=(24, 24), scenario="haldane-trivial-band1"
            ),
        ),
        Scenario(
            name="haldane-topological-band1",
            description="Haldane lower band in the Chern phase; orthonormal "
            "bases are impossible and the run produces an l = 2 tight frame "
            "of exponentially decaying functions.",
            expected_verdict="obstructed",
            config=PipelineConfig(
                model=haldane_topological,
                grid=(48, 48),
                scenario="haldane-topological-band1",
            ),
        ),
        Scenario(
            name="hofstadter-q3-band1",
            description="Lowest Harper band at flux 1/3 (Chern 1); tight "
            "frame from canonical seeds at l = 2.  The q = 3 kernel decays "
            "exponentially but with strong shell oscillation, so the decay "
            "fit tolerance is relaxed to 0.95 for this demo.",
            expected_verdict="obstructed",
            config=PipelineConfig(
                model=hofstadter,
                grid=(48, 48),
                tolerances={"decay_r2": 0.95},
                scenario="hofstadter-q3-band1",
            ),
        ),
    ]
    return {row.name: row for row in rows}


SCENARIOS = _scenario_table()


def list_scenarios() -> list[dict]:
    """Static scenario table: name, description, expected verdict."""
    return [
        {
            "name": row.name,
            "description": row.description,
            "expected_verdict": row.expected_verdict,
        }
        for row in SCENARIOS.values()
    ]


def scenario_config(
    name: str,
    grid: tuple[int, ...] | None = None,
    construction: str | None = None,
    rng_seed: int | None = None,
    l_override: int | None = None,
) -> PipelineConfig:
    """The bundled config for ``name`` with optional field overrides."""
    if name not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario '{name}'; available: {sorted(SCENARIOS)}"
        )
    config = SCENARIOS[name].config
    replacements: dict[str, Any] = {}
    if grid is not None:
        if len(grid) != len(config.grid):
            raise ConfigError(
                f"scenario '{name}' needs a {len(config.grid)}-axis grid, "
                f"got {grid}"
            )
        replacements["grid"] = tuple(int(m) for m in grid)
    if construction is not None:
        replacements["construction"] = construction
    if rng_seed is not None:
        replacements["rng_seed"] = int(rng_seed)
    if l_override is not None:
        replacements["l_override"] = int(l_override)
    return dataclasses.replace(config, **replacements)


def exit_code_for(exc: Exception) -> int:
    """The exit code contract for failures raised by run_pipeline."""
    if isinstance(exc, (ConfigError, InvalidSpec, SizeMismatch, SupercellTooSmall)):
        return 2
    if isinstance(exc, GapViolation):
        return 3
    if isinstance(
        exc,
        (
            ObstructionDetected,
            SpanningFailure,
            IllConditioned,
            DegenerateFamily,
            UnresolvedField,
            EigensolveFailure,
            NotTwoDimensional,
        ),
    ):
        return 4
    raise exc


@dataclasses.dataclass(eq=False)
class PipelineReport:
    """Run result: the structured report plus rendered artifact files."""

    report: dict
    artifacts: dict[str, str]

    @property
    def passed(self) -> bool:
        return bool(self.report["passed"])

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        # strict JSON has no NaN/Infinity; compact-support profiles use them
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def _model_report(spec: ModelSpec) -> dict:
    return {"kind": spec.kind, "parameters": _jsonable(dict(spec.parameters))}


def _build_sections(config, pfield, topo):
    """Sections per the construction mode; returns (family, construction_log)."""
    mode = config.construction
    m = pfield.rank
    n = pfield.fiber_dim
    if mode == "auto":
        if topo.verdict == "undetermined":
            raise UnresolvedField(
                "topology verdict undetermined on this grid; refine the "
                "momentum grid before constructing sections"
            )
        mode = "orthonormal" if topo.verdict == "trivial" else "tightFrame"

    if mode == "orthonormal":
        family = parallel_transport_gauge(pfield)
        log = {
            "mode": config.construction,
            "resolved_mode": "orthonormal",
            "method": "parallel_transport",
            "achieved_l": m,
            "attempts": [],
        }
        return family, log

    if mode == "control":
        if m != 1:
            raise ConfigError(
                f"the control construction is single-band only (rank {m} selected)"
            )
        family = discontinuous_control_gauge(pfield)
        log = {
            "mode": config.construction,
            "resolved_mode": "control",
            "method": "per_point_phase_rule",
            "achieved_l": 1,
            "attempts": [],
        }
        return family, log

    # tight-frame path with l-escalation
    l_max = min(topo.type_bound * m, n)
    l_start = config.l_override if config.l_override is not None else min(m + 1, l_max)
    if not (m <= l_start <= l_max):
        raise ConfigError(
            f"l override {l_start} outside the admissible range "
            f"[{m}, {l_max}] for rank {m} in fiber dimension {n}"
        )
    attempts = []
    last_exc: Exception | None = None
    for l_try in range(l_start, l_max + 1):
        try:
            seeds, diagnostics = seed_sections(
                pfield, l_try, config.seed_strategy, rng_seed=config.rng_seed
            )
            family = canonical_tight_frame(pfield, seeds)
        except (SpanningFailure, IllConditioned) as exc:
            attempts.append(
                {
                    "l": l_try,
                    "strategy": config.seed_strategy,
                    "outcome": type(exc).__name__,
                    "detail": str(exc),
                }
            )
            last_exc = exc
            continue
        attempts.append(
            {
                "l": l_try,
                "strategy": config.seed_strategy,
                "outcome": "ok",
                "min_margin": float(diagnostics.min_margin),
            }
        )
        log = {
            "mode": config.construction,
            "resolved_mode": "tightFrame",
            "method": "projected_seed_frame",
            "achieved_l": l_try,
            "attempts": attempts,
        }
        return family, log
    assert last_exc is not None
    raise last_exc


def _decay_gate(profiles, threshold: float) -> tuple[bool, float]:
    """Pass iff every function is compactly supported or fits exponentially."""
    worst = 1.0
    ok = True
    for prof in profiles:
        if prof.compact_support:
            continue
        worst = min(worst, prof.fit_r2)
        if not prof.exponential_flag or prof.fit_r2 < threshold:
            ok = False
    return ok, worst


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    """Execute one configured run and assemble report + artifacts.

    Raises ConfigError/InvalidSpec (bad configuration), GapViolation
    (selection not isolated), or a construction failure; check failures
    do not raise, they are recorded in the report with passed = False.
    """
    config.validate()
    tolerances = config.validated_tolerances()
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    family = build_model(config.model)
    if len(config.grid) != family.lattice.dim:
        raise ConfigError(
            f"grid has {len(config.grid)} axes but model "
            f"'{config.model.kind}' is {family.lattice.dim}-dimensional"
        )
    grid = KGrid(family.lattice, tuple(int(m) for m in config.grid))
    timings["build"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    bands = band_structure(family, grid)
    selection = select_bands(bands, config.first_band, config.last_band, config.min_gap)
    pfield = apply_frame_map(family, projector_field(bands, selection))
    timings["spectral"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    topo = triviality_verdict(pfield)
    timings["topology"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sections, construction_log = _build_sections(config, pfield, topo)
    timings["construction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    wset = synthesize_wannier(sections, selection)
    profiles = decay_profile(wset)
    timings["synthesis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    checks: dict[str, dict] = {}

    def record(name: str, value: float, threshold: float, enabled: bool = True,
               passed: bool | None = None) -> None:
        if passed is None:
            passed = value <= threshold
        checks[name] = {
            "value": float(value),
            "tolerance": float(threshold),
            "enabled": bool(enabled),
            "passed": bool(passed) if enabled else True,
        }

    record("plancherel", plancherel_residual(wset, sections), tolerances["plancherel"])
    record("membership", membership_residual(sections, pfield), tolerances["membership"])
    record(
        "frame_identity",
        frame_identity_residual(sections, pfield),
        tolerances["frame_identity"],
    )
    record(
        "parseval",
        parseval_check(wset, pfield, trials=config.trials, rng_seed=config.rng_seed),
        tolerances["parseval"],
    )
    # the global Parseval equality and the pointwise frame identity witness
    # the same property; a run where they disagree is internally broken
    agreement = checks["frame_identity"]["passed"] == checks["parseval"]["passed"]
    checks["frame_parseval_agreement"] = {
        "value": float(not agreement),
        "tolerance": 0.0,
        "enabled": True,
        "passed": bool(agreement),
    }
    record(
        "orthonormality",
        gram_identity_residual(sections),
        tolerances["orthonormality"],
        enabled=(sections.count == pfield.rank),
    )
    decay_enabled = construction_log["resolved_mode"] != "control"
    decay_ok, decay_worst = _decay_gate(profiles, tolerances["decay_r2"])
    checks["decay"] = {
        "value": float(decay_worst),
        "tolerance": float(tolerances["decay_r2"]),
        "enabled": bool(decay_enabled),
        "passed": bool(decay_ok) if decay_enabled else True,
    }
    timings["checks"] = time.perf_counter() - t0

    passed = all(entry["passed"] for entry in checks.values())

    report = {
        "format": REPORT_FORMAT,
        "scenario": config.scenario,
        "model": _model_report(config.model),
        "grid": list(grid.sizes),
        "bands": {
            "first": selection.first,
            "last": selection.last,
            "gap_below": _jsonable(selection.gap_below),
            "gap_above": _jsonable(selection.gap_above),
            "interval": list(selection.interval),
        },
        "run": {
            "construction": config.construction,
            "seed_strategy": config.seed_strategy,
            "trials": config.trials,
            "rng_seed": config.rng_seed,
            "l_override": config.l_override,
            "tolerances": {k: float(v) for k, v in sorted(tolerances.items())},
        },
        "topology": {
            "dim": topo.dim,
            "rank": topo.rank,
            "chern": topo.chern,
            "verdict": topo.verdict,
            "type_bound": topo.type_bound,
            "frame_bounds": list(topo.frame_bounds),
            "minimal_l_estimate": topo.minimal_l_estimate,
        },
        "construction": construction_log,
        "checks": checks,
        "decay": [
            {
                "function": j,
                "fitted_rate": _jsonable(prof.fitted_rate),
                "fit_r2": _jsonable(prof.fit_r2),
                "power_r2": _jsonable(prof.power_r2),
                "exponential_flag": bool(prof.exponential_flag),
                "compact_support": bool(prof.compact_support),
                "slow_decay_sum": _jsonable(prof.slow_decay_sum),
                "fit_window": list(prof.fit_window),
                "shells": len(prof.shell_norms),
            }
            for j, prof in enumerate(profiles)
        ],
        "passed": passed,
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    report = _jsonable(report)

    artifacts = {"report.json": json.dumps(report, indent=2, sort_keys=True) + "\n"}
    artifacts["bands.csv"] = _bands_csv(bands)
    for j, prof in enumerate(profiles):
        artifacts[f"decay_{j}.csv"] = _decay_csv(prof)
    for j in range(sections.count):
        artifacts[f"sections_{j}.csv"] = _sections_csv(sections, j)
    return PipelineReport(report=report, artifacts=artifacts)


def _bands_csv(bands) -> str:
    n = bands.fiber_dim
    evals = bands.eigenvalues.reshape(-1, n)
    out = io.StringIO()
    out.write("k_index," + ",".join(f"lambda_{j}" for j in range(1, n + 1)) + "\n")
    for idx, row in enumerate(evals):
        out.write(str(idx) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")
    return out.getvalue()


def _decay_csv(prof) -> str:
    out = io.StringIO()
    out.write("shell,norm\n")
    for r, value in enumerate(prof.shell_norms):
        out.write(f"{r},{value:.17g}\n")
    return out.getvalue()


def _sections_csv(sections, j: int) -> str:
    n = sections.fiber_dim
    values = sections.section(j).reshape(-1, n)
    out = io.StringIO()
    header = ["k_index"]
    for comp in range(n):
        header += [f"re_{comp}", f"im_{comp}"]
    out.write(",".join(header) + "\n")
    for idx, row in enumerate(values):
        cells = [str(idx)]
        for comp in row:
            cells += [f"{comp.real:.17g}", f"{comp.imag:.17g}"]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_artifacts(result: PipelineReport, out_dir) -> list[str]:
    """Write all artifact files under ``out_dir``; returns written paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, text in result.artifacts.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        written.append(path)
    return sorted(written)
