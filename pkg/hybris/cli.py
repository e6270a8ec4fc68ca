# -*- coding: utf-8 -*-
# cython: language_level=3
# BSD 3-Clause License
#
# Copyright (c) 2021, the Hybris contributors
# All rights reserved.
#
# Redistribution and use in source and binary forms, with or without
# modification, are permitted provided that the following conditions are met:
#
# * Redistributions of source code must retain the above copyright notice, this
#   list of conditions and the following disclaimer.
#
# * Redistributions in binary form must reproduce the above copyright notice,
#   this list of conditions and the following disclaimer in the documentation
#   and/or other materials provided with the distribution.
#
# * Neither the name of the copyright holder nor the names of its
#   contributors may be used to endorse or promote products derived from
#   this software without specific prior written permission.
#
# THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS"
# AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE
# IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
# DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR CONTRIBUTORS BE LIABLE
# FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL
# DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR
# SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER
# CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY,
# OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE
# OF THIS SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.
"""Command line interface: `solve`, `sweep` and `analyze`."""

from __future__ import annotations

__all__: typing.Sequence[str] = ["build_parser", "main", "solution_to_dict"]

import argparse
import json
import logging
import pathlib
import sys
import typing

import numpy as np
import pandas as pd

from . import analysis
from . import channels
from . import config as config_
from . import errors
from . import model
from . import optimizer
from . import sweeps

_LOGGER = logging.getLogger(__name__)

_EXIT_FAILURE = 1
_EXIT_USAGE = 2
_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _write_json(data: typing.Any, out_dir: typing.Optional[pathlib.Path], name: str, /) -> None:
    text = json.dumps(data, indent=2) + "\n"
    if out_dir is None:
        sys.stdout.write(text)
        return

    path = out_dir / name
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")

    except OSError as exc:
        raise errors.OutputError(f"couldn't write {path}: {exc}", path=path) from exc

    _LOGGER.info("Wrote %s", path)


def solution_to_dict(solution: model.Solution, /) -> typing.Dict[str, typing.Any]:
    """JSON form of a solution; every complex beam entry is a `[real, imag]` pair."""
    return {
        "theta_coherent": solution.phases.theta_coherent.tolist(),
        "theta_fixed": solution.phases.theta_fixed.tolist(),
        "beams": [[[float(entry.real), float(entry.imag)] for entry in row] for row in solution.beams.vectors],
        "delivery_time": solution.delivery_time,
        "per_user_rate": solution.per_user_rate.tolist(),
        "objective": solution.objective,
    }


def _load_mapping(path: typing.Optional[str], /) -> typing.Dict[str, typing.Any]:
    return config_.load_json(path) if path is not None else {}


def _run_solve(args: argparse.Namespace, /) -> int:
    mapping = _load_mapping(args.config)
    if args.seed is not None:
        mapping["seed"] = args.seed

    resolved = config_.ResolvedConfig.from_mapping(mapping)
    draw = channels.realization(
        resolved.geometry, resolved.fading, resolved.system, resolved.seed, resolved.realization
    )
    rng = np.random.default_rng(np.random.SeedSequence([resolved.seed, resolved.realization, 1]))
    solution, trace = optimizer.solve(resolved.system, draw, resolved.solver, rng=rng)
    report = model.check_feasibility(solution, resolved.system, draw, tolerance=resolved.solver.feasibility_tol)

    out_dir = pathlib.Path(args.out) if args.out is not None else None
    if args.format in ("json", "both") or out_dir is None:
        result = {
            "config": resolved.to_mapping(),
            "solution": solution_to_dict(solution),
            "feasibility": report.to_dict(),
            "trace": trace.to_dict(),
        }
        _write_json(result, out_dir, "solution.json")

    if args.format in ("csv", "both") and out_dir is not None:
        path = out_dir / "trace.csv"
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            pd.DataFrame([record.to_dict() for record in trace.records]).to_csv(path, index=False)

        except OSError as exc:
            raise errors.OutputError(f"couldn't write {path}: {exc}", path=path) from exc

    return 0


def _run_sweep(args: argparse.Namespace, /) -> int:
    if (args.config is None) == (args.preset is None):
        raise errors.ConfigurationError("exactly one of --config and --preset must be given")

    if args.preset is not None:
        spec = sweeps.get_preset(args.preset)

    else:
        spec = sweeps.ScenarioSpec.from_dict(config_.load_json(args.config))

    if args.seed is not None:
        spec = spec.replace(seed=args.seed)

    if args.realizations is not None:
        spec = spec.replace(realizations=args.realizations)

    if args.dump_spec:
        out_dir = pathlib.Path(args.out) if args.out is not None else None
        _write_json(spec.to_dict(), out_dir, f"{spec.scenario}.spec.json")
        return 0

    result = sweeps.run_scenario(spec, workers=args.workers)
    for path in sweeps.emit(result, args.out if args.out is not None else "results", args.format):
        _LOGGER.info("Wrote %s", path)

    return 0


def _run_analyze(args: argparse.Namespace, /) -> int:
    request = config_.AnalysisConfig.from_mapping(_load_mapping(args.config))
    report = analysis.analyze_scenario(request.scenario, n_coherent=request.n_coherent, magnitudes=request.magnitudes)
    _write_json(report, pathlib.Path(args.out) if args.out is not None else None, "analysis.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser of the `hybris` command."""
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON file with unit-suffixed keys")
    shared.add_argument("--seed", type=int, help="master seed, overrides the config's")
    shared.add_argument("--out", help="output directory; results go to stdout when left out")
    shared.add_argument("--format", choices=("csv", "json", "both"), default="both", help="output file format")
    shared.add_argument("--log-level", choices=_LOG_LEVELS, default="WARNING", help="root logger level")

    parser = argparse.ArgumentParser(
        prog="hybris", description="Throughput optimisation for hybrid coherent/fixed phase RIS downlinks"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", parents=[shared], help="solve one channel realization")
    solve.set_defaults(handler=_run_solve)

    sweep = commands.add_parser("sweep", parents=[shared], help="run a Monte-Carlo sweep")
    sweep.add_argument("--preset", choices=sweeps.preset_names(aliases=True), help="run a registered sweep preset")
    sweep.add_argument("--workers", type=int, default=1, help="worker processes (joblib n_jobs)")
    sweep.add_argument("--realizations", type=int, help="override the spec's realization count")
    sweep.add_argument("--dump-spec", action="store_true", help="write the resolved spec as JSON and exit")
    sweep.set_defaults(handler=_run_sweep)

    analyze = commands.add_parser("analyze", parents=[shared], help="closed-form single-user analysis")
    analyze.set_defaults(handler=_run_analyze)
    return parser


def main(argv: typing.Optional[typing.Sequence[str]] = None, /) -> int:
    """Entry point of the `hybris` command.

    Returns
    -------
    builtins.int
        The process exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    handler: typing.Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)

    except errors.ConfigurationError as exc:
        _LOGGER.error("Invalid configuration: %s", exc)
        return _EXIT_USAGE

    except errors.HybrisError as exc:
        _LOGGER.error("%s", exc)
        return _EXIT_FAILURE
