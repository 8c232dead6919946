"""Command-line client for the pipeline.

``run`` accepts either a bundled scenario name or an INI config file and
executes the run in process by default, or against a remote service when
``--url`` is given; either way the same request body and report schema
are used, so results are interchangeable.  ``list-scenarios`` prints the
bundled runs, ``serve`` starts the HTTP service.

Config files are flat INI.  ``[model]`` holds ``kind`` plus the model's
parameters, ``[model.potential]`` (optional) holds Fourier coefficients
keyed by integer harmonic, ``[run]`` holds grid / band window /
construction settings, ``[tolerances]`` overrides check thresholds.
Unknown sections or keys are rejected by name.

Exit codes: 0 all checks passed, 1 a verification check failed, 2 bad
configuration, 3 band selection not gap-isolated, 4 construction failed
(obstruction or seeds that never span).
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys

from .errors import ConfigError
from .pipeline import exit_code_for, list_scenarios

_RUN_KEYS = {
    "grid": "grid",
    "first_band": "first_band",
    "last_band": "last_band",
    "construction": "construction",
    "l_override": "l_override",
    "seed_strategy": "seed_strategy",
    "trials": "trials",
    "rng_seed": "rng_seed",
    "min_gap": "min_gap",
}
_INT_RUN_KEYS = ("first_band", "last_band", "l_override", "trials", "rng_seed")
_KNOWN_SECTIONS = ("model", "model.potential", "run", "tolerances")


def _coerce(text: str):
    """INI values: JSON scalars/lists when they parse, raw string otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_grid(text: str) -> list[int]:
    parts = text.lower().replace("x", " ").split()
    try:
        sizes = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"grid must look like '64' or '48x48', got '{text}'")
    if not sizes or any(m < 1 for m in sizes):
        raise ConfigError(f"grid sizes must be positive, got '{text}'")
    return sizes


def _load_config_file(path: str) -> dict:
    """Parse an INI run config into a request body; reject unknown keys."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case sensitive (e.g. g_max, -1)
    with open(path, "r", encoding="utf-8") as handle:
        try:
            parser.read_file(handle, source=path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}")

    for section in parser.sections():
        if section not in _KNOWN_SECTIONS:
            raise ConfigError(
                f"{path}: unknown section [{section}]; expected one of "
                f"{list(_KNOWN_SECTIONS)}"
            )
    if "model" not in parser:
        raise ConfigError(f"{path}: missing required section [model]")
    if "kind" not in parser["model"]:
        raise ConfigError(f"{path}: section [model] must set 'kind'")

    parameters = {
        key: _coerce(value)
        for key, value in parser["model"].items()
        if key != "kind"
    }
    if "model.potential" in parser:
        potential = {}
        for key, value in parser["model.potential"].items():
            try:
                g = int(key)
            except ValueError:
                raise ConfigError(
                    f"{path}: section [model.potential] keys must be integer "
                    f"harmonics, got '{key}'"
                )
            potential[g] = _coerce(value)
        parameters["potential"] = potential

    body: dict = {
        "model": {"kind": parser["model"]["kind"], "parameters": parameters}
    }

    run_section = parser["run"] if "run" in parser else {}
    for key, value in run_section.items():
        if key not in _RUN_KEYS:
            raise ConfigError(
                f"{path}: section [run]: unknown key '{key}'; expected one "
                f"of {sorted(_RUN_KEYS)}"
            )
        if key == "grid":
            body["grid"] = _parse_grid(value)
        elif key in _INT_RUN_KEYS:
            try:
                body[key] = int(value)
            except ValueError:
                raise ConfigError(f"{path}: [run] {key} must be an integer, got '{value}'")
        elif key == "min_gap":
            try:
                body[key] = float(value)
            except ValueError:
                raise ConfigError(f"{path}: [run] min_gap must be a number, got '{value}'")
        else:
            body[key] = value
    if "grid" not in body:
        raise ConfigError(f"{path}: section [run] must set 'grid'")

    if "tolerances" in parser:
        tolerances = {}
        for key, value in parser["tolerances"].items():
            try:
                tolerances[key] = float(value)
            except ValueError:
                raise ConfigError(
                    f"{path}: [tolerances] {key} must be a number, got '{value}'"
                )
        body["tolerances"] = tolerances
    return body


def _apply_overrides(body: dict, args: argparse.Namespace) -> dict:
    if args.construction is not None:
        body["construction"] = args.construction
    if args.grid is not None:
        body["grid"] = _parse_grid(args.grid)
    if args.seed is not None:
        body["rng_seed"] = args.seed
    if getattr(args, "l_override", None) is not None:
        body["l_override"] = args.l_override
    return body


def _print_summary(report: dict, passed: bool, out_dir: str | None) -> None:
    topo = report["topology"]
    cons = report["construction"]
    print(f"model: {report['model']['kind']}  grid: {report['grid']}  "
          f"bands: {report['bands']['first']}..{report['bands']['last']}")
    chern = topo["chern"] if topo["chern"] is not None else "-"
    print(f"topology: {topo['verdict']} (chern {chern}, rank {topo['rank']})")
    print(f"construction: {cons['resolved_mode']} with l = {cons['achieved_l']}")
    for name, check in report["checks"].items():
        if not check["enabled"]:
            state = "skipped"
        elif check["passed"]:
            state = "pass"
        else:
            state = "FAIL"
        print(f"  {name:26s} {state:7s} value {check['value']:.3e}  "
              f"tol {check['tolerance']:.3e}")
    print(f"result: {'PASS' if passed else 'FAIL'}")
    if out_dir is not None:
        print(f"artifacts written to {out_dir}")


def _write_artifacts(artifacts: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, text in artifacts.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as handle:
            handle.write(text)


def _run_local(body: dict, out_dir: str) -> int:
    from pydantic import ValidationError

    from . import pipeline
    from .service import RunRequest

    try:
        request = RunRequest(**body)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "request"
        print(f"config error at {where}: {first['msg']}", file=sys.stderr)
        return 2
    try:
        result = pipeline.run_pipeline(request.to_config())
    except Exception as exc:
        code = exit_code_for(exc)  # re-raises anything outside the contract
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    _write_artifacts(result.artifacts, out_dir)
    _print_summary(result.report, result.passed, out_dir)
    return result.exit_code


def _run_remote(body: dict, out_dir: str, url: str) -> int:
    import httpx

    response = httpx.post(url.rstrip("/") + "/run", json=body, timeout=600.0)
    if response.status_code == 200:
        payload = response.json()
        _write_artifacts(payload["artifacts"], out_dir)
        _print_summary(payload["report"], payload["passed"], out_dir)
        return payload["exit_code"]
    detail = response.json().get("detail")
    if isinstance(detail, dict) and "exit_code" in detail:
        print(f"{detail['error']}: {detail['message']}", file=sys.stderr)
        return detail["exit_code"]
    print(f"request rejected ({response.status_code}): {detail}", file=sys.stderr)
    return 2


def cmd_run(args: argparse.Namespace) -> int:
    if os.path.exists(args.config):
        body = _load_config_file(args.config)
    else:
        body = {"scenario": args.config}
    body = _apply_overrides(body, args)
    if args.url is not None:
        return _run_remote(body, args.out, args.url)
    return _run_local(body, args.out)


def cmd_list_scenarios(_args: argparse.Namespace) -> int:
    for row in list_scenarios():
        print(f"{row['name']:28s} [{row['expected_verdict']}]")
        print(f"    {row['description']}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wannierframes",
        description="Construct and verify localized Wannier bases and "
        "tight frames for gap-isolated bands.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a config file or bundled scenario")
    run.add_argument("config", help="path to an INI config, or a scenario name")
    run.add_argument("--construction",
                     choices=["auto", "orthonormal", "tightFrame", "control"],
                     default=None, help="override the construction mode")
    run.add_argument("--grid", default=None, metavar="MxM",
                     help="override the momentum grid, e.g. 64 or 48x48")
    run.add_argument("--out", default="out", help="artifact output directory")
    run.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    run.add_argument("--l-override", dest="l_override", type=int, default=None,
                     help="force the number of frame generators")
    run.add_argument("--url", default=None,
                     help="base URL of a running service; default runs in process")
    run.set_defaults(func=cmd_run)

    ls = sub.add_parser("list-scenarios", help="list bundled demonstration runs")
    ls.set_defaults(func=cmd_list_scenarios)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
