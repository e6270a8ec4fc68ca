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
"""Monte-Carlo sweeps over one configuration parameter.

A sweep crosses its series (named override sets), its grid and its
baselines with a number of channel realizations. Every instance draws its
channels from `(seed, realization)` alone so all baselines and grid points
see the same draw wherever their dimensions match.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "BASELINES",
    "InstanceOutcome",
    "ScenarioSpec",
    "SweepPoint",
    "SweepResult",
    "as_preset",
    "baseline_config",
    "emit",
    "get_preset",
    "preset_names",
    "run_scenario",
]

import dataclasses
import json
import logging
import math
import pathlib
import time
import typing

import joblib
import numpy as np
import pandas as pd

from . import channels
from . import config as config_
from . import errors
from . import model
from . import optimizer
from . import retry

_LOGGER = logging.getLogger(__name__)

BASELINES: typing.Final[typing.Tuple[str, ...]] = ("proposed", "fully_coherent", "fully_fixed", "b_variant")
"""Known baseline names, in the order they're reported."""

_FEASIBLE = "feasible"
_INFEASIBLE = "infeasible"
_FAILED = "failed"
_FORMATS = frozenset(("csv", "json", "both"))
_CSV_COLUMNS = (
    "grid_value",
    "baseline",
    "mean_tput",
    "stderr",
    "n_feasible",
    "mean_t",
    "mean_iters",
    "n_infeasible",
    "n_failed",
)

_PresetT = typing.Callable[[], "ScenarioSpec"]
_PRESETS: typing.Dict[str, _PresetT] = {}
_PRESET_ALIASES: typing.Dict[str, str] = {}
# The default 10 b/s leaves no transmission window once N_coh reaches 10 at b = 1.
_PRESET_DELIVERY_RATE = 25.0


def _is_strictly_monotone(values: typing.Sequence[float], /) -> bool:
    steps = [after - before for before, after in zip(values, values[1:])]
    return all(step > 0 for step in steps) or all(step < 0 for step in steps)


@dataclasses.dataclass(frozen=True)
class ScenarioSpec:
    """Description of one sweep.

    Attributes
    ----------
    scenario : builtins.str
        Name of the sweep, used for its output file names.
    parameter : builtins.str
        Configuration key the grid values are written to (for example
        `"N_coh"`, `"p_dbm"` or `"E_max_joules"`).
    grid : typing.Tuple[builtins.float, ...]
        Non-empty strictly monotone grid.
    realizations : builtins.int
        Channel realizations per grid point.
    seed : builtins.int
        Master seed of the channel and initialization streams.
    baselines : typing.Tuple[builtins.str, ...]
        Subset of `BASELINES` to run.
    overrides : typing.Mapping[builtins.str, typing.Any]
        Configuration keys applied on top of the defaults for every instance.
    series : typing.Mapping[builtins.str, typing.Mapping[builtins.str, typing.Any]]
        Named override sets crossed with the grid; empty for a single curve.
    b_variant_bits : builtins.int
        Phase resolution used by the `b_variant` baseline.
    solver : typing.Mapping[builtins.str, typing.Any]
        `hybris.config.SolverOptions` fields for every instance.
    """

    scenario: str
    parameter: str
    grid: typing.Tuple[float, ...]
    realizations: int = 100
    seed: int = 0
    baselines: typing.Tuple[str, ...] = ("proposed",)
    overrides: typing.Mapping[str, typing.Any] = dataclasses.field(default_factory=dict)
    series: typing.Mapping[str, typing.Mapping[str, typing.Any]] = dataclasses.field(default_factory=dict)
    b_variant_bits: int = 2
    solver: typing.Mapping[str, typing.Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        grid = tuple(self.grid)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "baselines", tuple(self.baselines))
        object.__setattr__(self, "overrides", dict(self.overrides))
        object.__setattr__(self, "series", {label: dict(values) for label, values in self.series.items()})
        object.__setattr__(self, "solver", dict(self.solver))

        if not grid:
            raise errors.ConfigurationError("a sweep grid can't be empty")

        if not _is_strictly_monotone(grid):
            raise errors.ConfigurationError("a sweep grid must be strictly monotone")

        if self.realizations < 1:
            raise errors.ConfigurationError("a sweep needs at least one realization")

        if not self.baselines or not set(self.baselines) <= set(BASELINES):
            raise errors.ConfigurationError(f"baselines must be a non-empty subset of {', '.join(BASELINES)}")

        if self.b_variant_bits < 1:
            raise errors.ConfigurationError("b_variant_bits must be at least 1")

        if self.parameter in self.overrides:
            raise errors.ConfigurationError(f"the swept parameter {self.parameter!r} can't also be overridden")

        # Surface bad keys before any worker starts.
        for label in self.series_labels:
            self.resolve(label, grid[0])

    @property
    def series_labels(self) -> typing.Tuple[typing.Optional[str], ...]:
        return tuple(self.series) if self.series else (None,)

    def resolve(self, label: typing.Optional[str], value: float, /) -> config_.ResolvedConfig:
        """Resolve the configuration of one series at one grid value.

        Raises
        ------
        hybris.errors.ConfigurationError
            If the resulting configuration is invalid.
        """
        mapping: typing.Dict[str, typing.Any] = dict(self.overrides)
        if label is not None:
            mapping.update(self.series[label])

        mapping[self.parameter] = value
        mapping["seed"] = self.seed
        if self.solver:
            mapping["solver"] = self.solver

        return config_.ResolvedConfig.from_mapping(mapping)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {
            "scenario": self.scenario,
            "parameter": self.parameter,
            "grid": list(self.grid),
            "realizations": self.realizations,
            "seed": self.seed,
            "baselines": list(self.baselines),
            "overrides": dict(self.overrides),
            "series": {label: dict(values) for label, values in self.series.items()},
            "b_variant_bits": self.b_variant_bits,
            "solver": dict(self.solver),
        }

    @classmethod
    def from_dict(cls, data: typing.Mapping[str, typing.Any], /) -> ScenarioSpec:
        """Build a spec from its `to_dict` form.

        Raises
        ------
        hybris.errors.ConfigurationError
            If a key is missing or unknown or a value is invalid.
        """
        names = {field.name for field in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise errors.ConfigurationError(f"unknown scenario key(s): {', '.join(sorted(unknown))}")

        try:
            return cls(**data)

        except TypeError as exc:
            raise errors.ConfigurationError(f"invalid scenario: {exc}") from exc

    def replace(self, **changes: typing.Any) -> ScenarioSpec:
        return dataclasses.replace(self, **changes)


def baseline_config(
    base: model.SystemConfig, which: str, /, *, b_variant_bits: int = 2
) -> model.SystemConfig:
    """Derive a baseline's system from the proposed system.

    `fully_coherent` moves every element to the coherent sub-surface,
    `fully_fixed` moves every element to the fixed one (so no delivery time
    is needed) and `b_variant` swaps the phase resolution.

    Raises
    ------
    hybris.errors.ConfigurationError
        If `which` isn't one of `BASELINES`.
    """
    if which == "proposed":
        return base

    if which == "fully_coherent":
        return base.replace(n_coherent=base.n_elements, n_fixed=0)

    if which == "fully_fixed":
        return base.replace(n_coherent=0, n_fixed=base.n_elements)

    if which == "b_variant":
        return base.replace(bits=b_variant_bits)

    raise errors.ConfigurationError(f"unknown baseline {which!r}")


@dataclasses.dataclass(frozen=True)
class _Job:
    series: typing.Optional[str]
    grid_index: int
    grid_value: float
    realization: int
    baseline: str
    resolved: config_.ResolvedConfig
    b_variant_bits: int

    @property
    def order(self) -> typing.Tuple[str, int, int, int]:
        return (self.series or "", self.grid_index, self.realization, BASELINES.index(self.baseline))


@dataclasses.dataclass(frozen=True)
class InstanceOutcome:
    """Result of one (series, grid value, realization, baseline) solve."""

    series: typing.Optional[str]
    grid_index: int
    grid_value: float
    realization: int
    baseline: str
    status: str
    throughput: float = math.nan
    delivery_time: float = math.nan
    iterations: int = 0

    @property
    def order(self) -> typing.Tuple[str, int, int, int]:
        return (self.series or "", self.grid_index, self.realization, BASELINES.index(self.baseline))


def _run_instance(job: _Job, /) -> InstanceOutcome:
    resolved = job.resolved

    def _on_infeasible(exc: errors.InfeasibleError) -> None:
        _LOGGER.debug("Instance %s of %s at %s is infeasible: %s", job.realization, job.baseline, job.grid_value, exc)

    def _on_failure(exc: Exception) -> None:
        _LOGGER.warning("Instance %s of %s at %s failed: %s", job.realization, job.baseline, job.grid_value, exc)

    router = (
        retry.ErrorRouter()
        .route(errors.InfeasibleError, handler=_on_infeasible)
        .route(errors.HybrisError, ArithmeticError, ValueError, np.linalg.LinAlgError, handler=_on_failure)
    )
    with router:
        system = baseline_config(resolved.system, job.baseline, b_variant_bits=job.b_variant_bits)
        draw = channels.realization(
            resolved.geometry, resolved.fading, resolved.system, resolved.seed, job.realization
        ).repartition(system.n_coherent)
        rng = np.random.default_rng(np.random.SeedSequence([resolved.seed, job.realization, 1]))
        solution, trace = optimizer.solve(system, draw, resolved.solver, rng=rng)
        report = model.check_feasibility(solution, system, draw, tolerance=resolved.solver.feasibility_tol)
        if not report.feasible:
            _LOGGER.warning(
                "Instance %s of %s at %s ended outside the feasible set", job.realization, job.baseline, job.grid_value
            )

        else:
            return InstanceOutcome(
                job.series,
                job.grid_index,
                job.grid_value,
                job.realization,
                job.baseline,
                _FEASIBLE,
                throughput=solution.objective,
                delivery_time=solution.delivery_time,
                iterations=trace.iterations,
            )

    status = _INFEASIBLE if isinstance(router.handled, errors.InfeasibleError) else _FAILED
    return InstanceOutcome(job.series, job.grid_index, job.grid_value, job.realization, job.baseline, status)


@dataclasses.dataclass(frozen=True)
class SweepPoint:
    """Aggregate of one (series, grid value, baseline) cell; means cover feasible instances only."""

    series: typing.Optional[str]
    grid_value: float
    baseline: str
    mean_tput: float
    stderr: float
    n_feasible: int
    n_infeasible: int
    n_failed: int
    mean_t: float
    mean_iters: float

    @classmethod
    def aggregate(cls, outcomes: typing.Sequence[InstanceOutcome], /) -> SweepPoint:
        first = outcomes[0]
        feasible = [outcome for outcome in outcomes if outcome.status == _FEASIBLE]
        throughputs = np.array([outcome.throughput for outcome in feasible], dtype=np.float64)
        count = throughputs.size
        if count > 1:
            stderr = float(np.std(throughputs, ddof=1) / math.sqrt(count))

        else:
            stderr = 0.0 if count else math.nan

        return cls(
            series=first.series,
            grid_value=first.grid_value,
            baseline=first.baseline,
            mean_tput=float(np.mean(throughputs)) if count else math.nan,
            stderr=stderr,
            n_feasible=count,
            n_infeasible=sum(outcome.status == _INFEASIBLE for outcome in outcomes),
            n_failed=sum(outcome.status == _FAILED for outcome in outcomes),
            mean_t=float(np.mean([outcome.delivery_time for outcome in feasible])) if count else math.nan,
            mean_iters=float(np.mean([outcome.iterations for outcome in feasible])) if count else math.nan,
        )

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        result = dataclasses.asdict(self)
        return {key: None if isinstance(value, float) and math.isnan(value) else value for key, value in result.items()}


@dataclasses.dataclass(frozen=True)
class SweepResult:
    """Every aggregated cell of a sweep, ordered by series, grid index and baseline."""

    spec: ScenarioSpec
    points: typing.Tuple[SweepPoint, ...]

    def to_frame(self) -> pd.DataFrame:
        """Return the result as a data frame with the CSV column layout."""
        columns = list(_CSV_COLUMNS)
        if self.spec.series:
            columns.insert(0, "series")

        rows = [dataclasses.asdict(point) for point in self.points]
        return pd.DataFrame(rows, columns=columns)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {"spec": self.spec.to_dict(), "points": [point.to_dict() for point in self.points]}


def _jobs(spec: ScenarioSpec, /) -> typing.Iterator[_Job]:
    for label in spec.series_labels:
        for grid_index, value in enumerate(spec.grid):
            resolved = spec.resolve(label, value)
            for realization in range(spec.realizations):
                for baseline in spec.baselines:
                    yield _Job(label, grid_index, value, realization, baseline, resolved, spec.b_variant_bits)


def run_scenario(spec: ScenarioSpec, /, *, workers: int = 1) -> SweepResult:
    """Run every instance of a sweep and aggregate the outcomes.

    Instances failing or proving infeasible are counted and logged, never
    raised; aggregation order doesn't depend on completion order.

    Parameters
    ----------
    spec : ScenarioSpec

    Other Parameters
    ----------------
    workers : builtins.int
        Worker processes, following `joblib`'s `n_jobs` convention.

    Returns
    -------
    SweepResult
    """
    started = time.perf_counter()
    jobs = list(_jobs(spec))
    for label in spec.series_labels:
        for value in spec.grid:
            system = spec.resolve(label, value).system
            if not system.has_transmission_window:
                _LOGGER.warning(
                    "Sweep %s at %s=%s: delivering the phases takes %.3g s of the %.3g s frame, its instances will"
                    " count as infeasible",
                    spec.scenario,
                    spec.parameter,
                    value,
                    system.min_delivery_time,
                    system.frame_time,
                )

    _LOGGER.info("Running sweep %s: %s instance(s) on %s worker(s)", spec.scenario, len(jobs), workers)
    outcomes = joblib.Parallel(n_jobs=workers)(joblib.delayed(_run_instance)(job) for job in jobs)
    outcomes = sorted(outcomes, key=lambda outcome: outcome.order)

    cells: typing.Dict[typing.Tuple[str, int, str], typing.List[InstanceOutcome]] = {}
    for outcome in outcomes:
        cells.setdefault((outcome.series or "", outcome.grid_index, outcome.baseline), []).append(outcome)

    points = []
    for (_, _, baseline), cell in sorted(cells.items(), key=lambda item: item[1][0].order):
        point = SweepPoint.aggregate(cell)
        _LOGGER.info(
            "Sweep %s at %s=%s (%s): %s feasible, %s infeasible, %s failed",
            spec.scenario,
            spec.parameter,
            point.grid_value,
            baseline,
            point.n_feasible,
            point.n_infeasible,
            point.n_failed,
        )
        points.append(point)

    _LOGGER.info("Sweep %s finished in %.1f s", spec.scenario, time.perf_counter() - started)
    return SweepResult(spec, tuple(points))


def emit(
    result: SweepResult, out_dir: typing.Union[str, pathlib.Path], /, output_format: str = "both"
) -> typing.List[pathlib.Path]:
    """Write a sweep result as CSV, JSON or both.

    The JSON file mirrors the CSV rows and carries the full spec so the run
    can be reproduced from it.

    Returns
    -------
    typing.List[pathlib.Path]
        The written files.

    Raises
    ------
    hybris.errors.ConfigurationError
        If `output_format` isn't one of `"csv"`, `"json"` or `"both"`.
    hybris.errors.OutputError
        If a file couldn't be written.
    """
    if output_format not in _FORMATS:
        raise errors.ConfigurationError(f"unknown output format {output_format!r}")

    directory = pathlib.Path(out_dir)
    written: typing.List[pathlib.Path] = []
    path = directory
    try:
        directory.mkdir(parents=True, exist_ok=True)
        if output_format in ("csv", "both"):
            path = directory / f"{result.spec.scenario}.csv"
            result.to_frame().to_csv(path, index=False)
            written.append(path)

        if output_format in ("json", "both"):
            path = directory / f"{result.spec.scenario}.json"
            with path.open("w", encoding="utf-8") as file:
                json.dump(result.to_dict(), file, indent=2)
                file.write("\n")

            written.append(path)

    except OSError as exc:
        raise errors.OutputError(f"couldn't write {path}: {exc}", path=path) from exc

    return written


def as_preset(name: str, /, *aliases: str) -> typing.Callable[[_PresetT], _PresetT]:
    """Register a function returning a `ScenarioSpec` as a named preset.

    Parameters
    ----------
    name : builtins.str
        The preset's id.
    *aliases : builtins.str
        Other names `get_preset` accepts for it.

    Raises
    ------
    ValueError
        If a preset or alias is already registered under one of the names.
    """

    def decorator(callback: _PresetT, /) -> _PresetT:
        for key in (name, *aliases):
            if key in _PRESETS or key in _PRESET_ALIASES:
                raise ValueError(f"a preset named {key!r} is already registered")

        _PRESETS[name] = callback
        _PRESET_ALIASES.update((alias, name) for alias in aliases)
        return callback

    return decorator


def preset_names(*, aliases: bool = False) -> typing.List[str]:
    """List the registered preset ids, with their aliases too if `aliases` is set."""
    if aliases:
        return sorted((*_PRESETS, *_PRESET_ALIASES))

    return sorted(_PRESETS)


def get_preset(name: str, /) -> ScenarioSpec:
    """Build the preset registered as `name` or under the alias `name`.

    Raises
    ------
    hybris.errors.ConfigurationError
        If no preset has that name.
    """
    try:
        callback = _PRESETS[_PRESET_ALIASES.get(name, name)]

    except KeyError:
        raise errors.ConfigurationError(
            f"unknown preset {name!r}, expected one of {', '.join(preset_names(aliases=True))}"
        ) from None

    spec = callback()
    default_rate = config_.table_defaults().delivery_rate
    rate = spec.overrides.get("R_F_bps", default_rate)
    if rate != default_rate:
        _LOGGER.info(
            "Preset %s runs at R_F = %s b/s instead of the default %s b/s so every grid point keeps a transmission"
            " window",
            spec.scenario,
            rate,
            default_rate,
        )

    return spec


@as_preset("fig2a", "coherent-count")
def _coherent_count_sweep() -> ScenarioSpec:
    """Throughput against the coherent element count for two path-loss exponents."""
    return ScenarioSpec(
        scenario="fig2a",
        parameter="N_coh",
        grid=(4, 8, 12, 16, 20),
        overrides={"R_F_bps": _PRESET_DELIVERY_RATE},
        series={
            "alpha=2.2": {"alpha_br": 2.2, "alpha_ru": 2.2},
            "alpha=2.4": {"alpha_br": 2.4, "alpha_ru": 2.4},
        },
    )


@as_preset("fig2b", "delivery-power")
def _delivery_power_sweep() -> ScenarioSpec:
    """Throughput against the delivery power for several user counts, array sizes and distances."""
    return ScenarioSpec(
        scenario="fig2b",
        parameter="p_dbm",
        grid=(10.0, 15.0, 20.0, 25.0, 30.0),
        overrides={"R_F_bps": _PRESET_DELIVERY_RATE},
        series={
            "default": {},
            "K=2": {"K": 2},
            "M=4": {"M": 4},
            "d_RU=15": {"ris_user_distance_m": 15.0},
        },
    )


@as_preset("fig2c", "energy-budget")
def _energy_budget_sweep() -> ScenarioSpec:
    """Throughput against the energy budget for every baseline."""
    return ScenarioSpec(
        scenario="fig2c",
        parameter="E_max_joules",
        grid=(0.6, 0.8, 1.0),
        overrides={"R_F_bps": _PRESET_DELIVERY_RATE},
        baselines=BASELINES,
    )


@as_preset("custom")
def _custom_sweep() -> ScenarioSpec:
    """A small single-curve sweep at the default configuration, meant to be dumped and edited."""
    return ScenarioSpec(scenario="custom", parameter="N_coh", grid=(4, 8), realizations=10)
