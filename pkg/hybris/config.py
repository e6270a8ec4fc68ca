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
"""Configuration defaults, solver options and JSON ingestion.

JSON keys carry their unit in their name (`p_dbm`, `E_max_joules`,
`T_seconds` ...). Conversions from dBm to watts happen here and only here.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "AnalysisConfig",
    "ResolvedConfig",
    "SolverOptions",
    "dbm_to_watts",
    "default_fading",
    "default_geometry",
    "load_json",
    "table_defaults",
    "watts_to_dbm",
]

import dataclasses
import json
import math
import pathlib
import typing

from . import analysis
from . import channels
from . import errors
from . import model

_SYSTEM_KEYS: typing.Dict[str, str] = {
    "M": "antennas",
    "K": "users",
    "N_coh": "n_coherent",
    "N_fix": "n_fixed",
    "b": "bits",
    "R_F_bps": "delivery_rate",
    "T_seconds": "frame_time",
    "p_watts": "delivery_power",
    "p_dbm": "delivery_power",
    "E_max_joules": "energy_budget",
    "R_min_bits": "min_rates",
    "delta2_watts": "noise_powers",
    "delta2_dbm": "noise_powers",
}
_DBM_KEYS = frozenset(("p_dbm", "delta2_dbm"))
_FADING_KEYS = frozenset(("alpha_br", "alpha_ru", "rician_factor", "pl0_db"))
_GEOMETRY_KEYS: typing.Dict[str, str] = {
    "bs_pos_m": "bs_pos",
    "ris_pos_m": "ris_pos",
    "user_center_m": "user_circle_center",
    "user_radius_m": "user_circle_radius",
}
_RIS_USER_DISTANCE_KEY = "ris_user_distance_m"
_RUN_KEYS = frozenset(("seed", "realization"))
_SOLVER_KEY = "solver"


def dbm_to_watts(value: float, /) -> float:
    """Convert a power in dBm to watts."""
    return 10.0 ** ((value - 30.0) / 10.0)


def watts_to_dbm(value: float, /) -> float:
    """Convert a power in watts to dBm.

    Raises
    ------
    hybris.errors.DomainError
        If `value` isn't positive.
    """
    if not value > 0:
        raise errors.DomainError("only positive powers can be expressed in dBm")

    return 10.0 * math.log10(value) + 30.0


@dataclasses.dataclass(frozen=True)
class SolverOptions:
    """Settings of the alternating optimiser and its conic subproblem solves.

    Attributes
    ----------
    max_outer_iters : builtins.int
        Cap on alternating iterations.
    rel_tol : builtins.float
        Relative change of the true sum throughput below which the driver stops.
    conic_tol : builtins.float
        Gap and feasibility tolerance handed to the conic solver.
    feasibility_tol : builtins.float
        Relative tolerance used when accepting candidates and reporting
        constraint slacks.
    init_retries : builtins.int
        Extra coherent phase draws tried when the first start is infeasible.
    seed : builtins.int
        Seed of the initialization stream.
    solver : builtins.str
        First conic solver tried.
    fallback_solvers : typing.Tuple[builtins.str, ...]
        Solvers tried in order when the previous one failed.
    rank_penalty : builtins.float
        Initial weight of the rank-coupling penalty.
    rank_penalty_growth : builtins.float
        Growth factor of the rank-coupling penalty between penalised rounds.
    rank_penalty_max : builtins.float
        Cap on the rank-coupling penalty weight.
    consistency_tol : builtins.float
        Relative amount a subproblem objective may fall below its starting
        value before this is treated as an internal error.
    rank_tol : builtins.float
        Largest `1 − λ_max/Tr` at which a lifted matrix counts as rank one.
    rank_rounds : builtins.int
        Cap on penalised re-solves run while a relaxation stays above rank one.
    """

    max_outer_iters: int = 50
    rel_tol: float = 1e-4
    conic_tol: float = 1e-8
    feasibility_tol: float = 1e-6
    init_retries: int = 10
    seed: int = 0
    solver: str = "CLARABEL"
    fallback_solvers: typing.Tuple[str, ...] = ("SCS",)
    rank_penalty: float = 1.0
    rank_penalty_growth: float = 4.0
    rank_penalty_max: float = 1e3
    consistency_tol: float = 1e-7
    rank_tol: float = 1e-6
    rank_rounds: int = 6

    def __post_init__(self) -> None:
        if self.max_outer_iters < 1 or self.init_retries < 1:
            raise errors.ConfigurationError("max_outer_iters and init_retries must be positive")

        if self.rank_rounds < 0:
            raise errors.ConfigurationError("rank_rounds must be non-negative")

        if self.seed < 0:
            raise errors.ConfigurationError("seed must be non-negative")

        if not 0 < self.rel_tol < 1:
            raise errors.ConfigurationError("rel_tol must be in (0, 1)")

        positive = ("conic_tol", "feasibility_tol", "rank_penalty", "rank_penalty_max", "consistency_tol", "rank_tol")
        for name in positive:
            if not getattr(self, name) > 0:
                raise errors.ConfigurationError(f"{name} must be positive")

        if not self.rank_penalty_growth >= 1:
            raise errors.ConfigurationError("rank_penalty_growth must be at least 1")

        object.__setattr__(self, "solver", self.solver.upper())
        object.__setattr__(self, "fallback_solvers", tuple(solver.upper() for solver in self.fallback_solvers))

    @property
    def solver_chain(self) -> typing.Tuple[str, ...]:
        """The configured solvers in the order they're tried, without duplicates."""
        return tuple(dict.fromkeys((self.solver, *self.fallback_solvers)))

    def replace(self, **changes: typing.Any) -> SolverOptions:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        result = dataclasses.asdict(self)
        result["fallback_solvers"] = list(self.fallback_solvers)
        return result

    @classmethod
    def from_mapping(cls, mapping: typing.Mapping[str, typing.Any], /) -> SolverOptions:
        """Build options from a mapping of field names.

        Raises
        ------
        hybris.errors.ConfigurationError
            If an unknown key is present.
        """
        names = {field.name for field in dataclasses.fields(cls)}
        unknown = set(mapping) - names
        if unknown:
            raise errors.ConfigurationError(f"unknown solver option(s): {', '.join(sorted(unknown))}")

        values = dict(mapping)
        if "fallback_solvers" in values:
            values["fallback_solvers"] = tuple(values["fallback_solvers"])

        return cls(**values)


def table_defaults() -> model.SystemConfig:
    """Return the reference system: 8 antennas, 4 users, 8 coherent and 4 fixed elements.

    1 bit phases over a 10 b/s control link, a 1 s frame, 20 dBm delivery
    power, a 1 J energy budget, a 1 bit minimum throughput per user and
    −80 dBm noise.
    """
    return model.SystemConfig(
        antennas=8,
        users=4,
        n_coherent=8,
        n_fixed=4,
        bits=1,
        delivery_rate=10.0,
        frame_time=1.0,
        delivery_power=dbm_to_watts(20.0),
        energy_budget=1.0,
        min_rates=(1.0,) * 4,
        noise_powers=(dbm_to_watts(-80.0),) * 4,
    )


def default_geometry() -> channels.Geometry:
    """BS at the origin, RIS at (50, 10) and users in a radius 5 circle around (50, 0)."""
    return channels.Geometry()


def default_fading() -> channels.FadingParams:
    return channels.FadingParams()


@dataclasses.dataclass(frozen=True)
class ResolvedConfig:
    """A fully resolved run configuration."""

    system: model.SystemConfig = dataclasses.field(default_factory=table_defaults)
    geometry: channels.Geometry = dataclasses.field(default_factory=default_geometry)
    fading: channels.FadingParams = dataclasses.field(default_factory=default_fading)
    solver: SolverOptions = dataclasses.field(default_factory=SolverOptions)
    seed: int = 0
    realization: int = 0

    @classmethod
    def from_mapping(
        cls, mapping: typing.Mapping[str, typing.Any], /, *, base: typing.Optional[ResolvedConfig] = None
    ) -> ResolvedConfig:
        """Apply a unit-suffixed mapping on top of `base` (or the defaults).

        Raises
        ------
        hybris.errors.ConfigurationError
            If an unknown key is present or a resolved value is invalid.
        """
        base = base or cls()
        known = set(_SYSTEM_KEYS) | _FADING_KEYS | set(_GEOMETRY_KEYS) | _RUN_KEYS
        known |= {_RIS_USER_DISTANCE_KEY, _SOLVER_KEY}
        unknown = set(mapping) - known
        if unknown:
            raise errors.ConfigurationError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")

        for first, second in (("p_dbm", "p_watts"), ("delta2_dbm", "delta2_watts")):
            if first in mapping and second in mapping:
                raise errors.ConfigurationError(f"only one of {first} and {second} may be given")

        system_changes: typing.Dict[str, typing.Any] = {}
        for key, field in _SYSTEM_KEYS.items():
            if key not in mapping:
                continue

            value = mapping[key]
            if key in _DBM_KEYS:
                value = [dbm_to_watts(float(entry)) for entry in value] if _is_list(value) else dbm_to_watts(value)

            elif _is_list(value):
                value = tuple(float(entry) for entry in value)

            system_changes[field] = value

        fading = dataclasses.replace(base.fading, **{key: float(mapping[key]) for key in _FADING_KEYS & set(mapping)})
        geometry = dataclasses.replace(
            base.geometry, **{field: mapping[key] for key, field in _GEOMETRY_KEYS.items() if key in mapping}
        )
        if _RIS_USER_DISTANCE_KEY in mapping:
            geometry = geometry.with_ris_user_distance(float(mapping[_RIS_USER_DISTANCE_KEY]))

        solver = base.solver
        if _SOLVER_KEY in mapping:
            solver = SolverOptions.from_mapping({**solver.to_dict(), **mapping[_SOLVER_KEY]})

        try:
            system = base.system.replace(**system_changes)

        except (TypeError, ValueError) as exc:
            if isinstance(exc, errors.HybrisError):
                raise

            raise errors.ConfigurationError(f"invalid system configuration: {exc}") from exc

        return cls(
            system=system,
            geometry=geometry,
            fading=fading,
            solver=solver,
            seed=int(mapping.get("seed", base.seed)),
            realization=int(mapping.get("realization", base.realization)),
        )

    def to_mapping(self) -> typing.Dict[str, typing.Any]:
        """Return the unit-suffixed mapping that resolves back to this config."""
        system = self.system
        return {
            "M": system.antennas,
            "K": system.users,
            "N_coh": system.n_coherent,
            "N_fix": system.n_fixed,
            "b": system.bits,
            "R_F_bps": system.delivery_rate,
            "T_seconds": system.frame_time,
            "p_watts": system.delivery_power,
            "E_max_joules": system.energy_budget,
            "R_min_bits": list(system.min_rates),
            "delta2_watts": list(system.noise_powers),
            "alpha_br": self.fading.alpha_br,
            "alpha_ru": self.fading.alpha_ru,
            "rician_factor": self.fading.rician_factor,
            "pl0_db": self.fading.pl0_db,
            "bs_pos_m": list(self.geometry.bs_pos),
            "ris_pos_m": list(self.geometry.ris_pos),
            "user_center_m": list(self.geometry.user_circle_center),
            "user_radius_m": self.geometry.user_circle_radius,
            "solver": self.solver.to_dict(),
            "seed": self.seed,
            "realization": self.realization,
        }


def _is_list(value: typing.Any, /) -> bool:
    return isinstance(value, (list, tuple))


def load_json(path: typing.Union[str, pathlib.Path], /) -> typing.Dict[str, typing.Any]:
    """Read a JSON object from a file.

    Raises
    ------
    hybris.errors.ConfigurationError
        If the file can't be read or doesn't hold a JSON object.
    """
    path = pathlib.Path(path)
    try:
        with path.open("r", encoding="utf-8") as file:
            data = json.load(file)

    except OSError as exc:
        raise errors.ConfigurationError(f"couldn't read config file {path}: {exc}") from exc

    except json.JSONDecodeError as exc:
        raise errors.ConfigurationError(f"config file {path} isn't valid JSON: {exc}") from exc

    if not isinstance(data, dict):
        raise errors.ConfigurationError(f"config file {path} must hold a JSON object")

    return typing.cast("typing.Dict[str, typing.Any]", data)


_ANALYSIS_KEYS = frozenset(
    (
        "p_t_dbm",
        "p_t_watts",
        "p_dbm",
        "p_watts",
        "T_seconds",
        "E_max_joules",
        "b",
        "R_F_bps",
        "R_min_bits",
        "C",
        "p_bar",
        "h_r_magnitudes",
        "h_magnitudes",
        "delta2_dbm",
        "delta2_watts",
        "N_coh",
    )
)


def _power(mapping: typing.Mapping[str, typing.Any], prefix: str, default_dbm: float, /) -> float:
    dbm_key, watts_key = f"{prefix}_dbm", f"{prefix}_watts"
    if dbm_key in mapping and watts_key in mapping:
        raise errors.ConfigurationError(f"only one of {dbm_key} and {watts_key} may be given")

    if watts_key in mapping:
        return float(mapping[watts_key])

    return dbm_to_watts(float(mapping.get(dbm_key, default_dbm)))


@dataclasses.dataclass(frozen=True)
class AnalysisConfig:
    """A resolved closed-form analysis request.

    Attributes
    ----------
    scenario : hybris.analysis.SimpleScenario
    n_coherent : typing.Optional[builtins.float]
        Element count the operating point is evaluated at.
    magnitudes : typing.Optional[typing.Tuple[typing.Tuple[builtins.float, ...], typing.Tuple[builtins.float, ...]]]
        `(|h_r|, |h|)` per coherent element when the scenario was built from magnitudes.
    """

    scenario: analysis.SimpleScenario
    n_coherent: typing.Optional[float] = 8.0
    magnitudes: typing.Optional[typing.Tuple[typing.Tuple[float, ...], typing.Tuple[float, ...]]] = None

    @classmethod
    def from_mapping(cls, mapping: typing.Mapping[str, typing.Any], /) -> AnalysisConfig:
        """Resolve a unit-suffixed analysis mapping.

        `C` and `p_bar` may be given directly; otherwise they come from
        `h_r_magnitudes` and `h_magnitudes`, or from line-of-sight path loss
        over the default geometry when neither is given. The transmit power
        defaults to 27 dBm and the rest to the reference system.

        Raises
        ------
        hybris.errors.ConfigurationError
            If an unknown key is present or a value is invalid.
        """
        unknown = set(mapping) - _ANALYSIS_KEYS
        if unknown:
            raise errors.ConfigurationError(f"unknown analysis key(s): {', '.join(sorted(unknown))}")

        defaults = table_defaults()
        transmit_power = _power(mapping, "p_t", 27.0)
        noise_power = _power(mapping, "delta2", watts_to_dbm(defaults.noise_powers[0]))
        fields: typing.Dict[str, typing.Any] = {
            "delivery_power": _power(mapping, "p", watts_to_dbm(defaults.delivery_power)),
            "frame_time": float(mapping.get("T_seconds", defaults.frame_time)),
            "energy_budget": float(mapping.get("E_max_joules", defaults.energy_budget)),
            "bits": int(mapping.get("b", defaults.bits)),
            "delivery_rate": float(mapping.get("R_F_bps", defaults.delivery_rate)),
            "min_rate": float(mapping.get("R_min_bits", defaults.min_rates[0])),
        }
        n_coherent = mapping.get("N_coh", 8.0)
        n_coherent = None if n_coherent is None else float(n_coherent)

        has_magnitudes = "h_r_magnitudes" in mapping or "h_magnitudes" in mapping
        if has_magnitudes and ("C" in mapping or "p_bar" in mapping):
            raise errors.ConfigurationError("give either channel magnitudes or C and p_bar, not both")

        if has_magnitudes:
            magnitudes = (
                tuple(float(value) for value in mapping.get("h_r_magnitudes", ())),
                tuple(float(value) for value in mapping.get("h_magnitudes", ())),
            )
            scenario = analysis.SimpleScenario.from_magnitudes(
                magnitudes[0], magnitudes[1], noise_power, transmit_power=transmit_power, **fields
            )
            return cls(scenario, n_coherent, magnitudes)

        if "C" in mapping:
            channel_constant = float(mapping["C"])

        else:
            geometry, fading = default_geometry(), default_fading()
            ris_user_distance = math.dist(geometry.ris_pos, geometry.user_circle_center)
            channel_constant = channels.path_loss(
                geometry.bs_ris_distance, fading.alpha_br, fading.pl0_db
            ) * channels.path_loss(ris_user_distance, fading.alpha_ru, fading.pl0_db)

        snr_scale = float(mapping.get("p_bar", transmit_power / noise_power))
        scenario = analysis.SimpleScenario(
            transmit_power=transmit_power, channel_constant=channel_constant, snr_scale=snr_scale, **fields
        )
        return cls(scenario, n_coherent)
