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
"""Alternating optimisation driver.

One outer iteration refreshes the quadratic-transform auxiliaries (which
makes the surrogate equal the true throughput), then updates the delivery
time, the beamformers and the coherent phases in that order with everything
else held. A last block scales every beam up to the transmit budget, which
raises every SINR. Each block only ever replaces its variable with a
candidate that keeps every constraint and doesn't lower the surrogate, so the
recorded surrogate sequence is non-decreasing.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "AlternatingOptimizer",
    "IterationRecord",
    "OptimizerState",
    "SolveTrace",
    "initialize",
    "solve",
    "step",
]

import dataclasses
import logging
import math
import time
import typing

import numpy as np

from . import config as config_
from . import errors
from . import fractional
from . import model
from . import retry
from . import subproblems

if typing.TYPE_CHECKING:
    import numpy.typing as npt

_LOGGER = logging.getLogger(__name__)

_INITIAL_POWER_FRACTION = 0.9
_SURROGATE_SLACK = 1e-12
_POWER_SLACK = 1e-9

AUXILIARIES_BLOCK: typing.Final[str] = "auxiliaries"
DELIVERY_TIME_BLOCK: typing.Final[str] = "delivery-time"
BEAMFORMING_BLOCK: typing.Final[str] = "beamforming"
PHASE_BLOCK: typing.Final[str] = "phase"
POWER_BLOCK: typing.Final[str] = "power-scaling"


@dataclasses.dataclass(frozen=True)
class IterationRecord:
    """One row of a `SolveTrace`.

    Attributes
    ----------
    iteration : builtins.int
        `0` is the starting point.
    surrogate : builtins.float
        Surrogate sum throughput at the end of the iteration, in bits.
    throughput : builtins.float
        True sum throughput of the iterate, in bits.
    delivery_time : builtins.float
    energy_slack : builtins.float
    min_rate_slack : builtins.float
    wall_time : builtins.float
        Seconds spent on this iteration.
    rejected_blocks : typing.Tuple[builtins.str, ...]
        Blocks which kept their previous value because no candidate qualified.
    """

    iteration: int
    surrogate: float
    throughput: float
    delivery_time: float
    energy_slack: float
    min_rate_slack: float
    wall_time: float
    rejected_blocks: typing.Tuple[str, ...] = ()

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        result = dataclasses.asdict(self)
        result["rejected_blocks"] = list(self.rejected_blocks)
        return result


@dataclasses.dataclass
class SolveTrace:
    """Per-iteration history of one solve."""

    records: typing.List[IterationRecord] = dataclasses.field(default_factory=list)
    status: str = "running"

    @property
    def iterations(self) -> int:
        """Number of outer iterations run, not counting the starting point."""
        return max(len(self.records) - 1, 0)

    @property
    def surrogates(self) -> typing.List[float]:
        return [record.surrogate for record in self.records]

    def is_monotone(self, rel_slack: float = 1e-6, /) -> bool:
        """Whether every surrogate is at least the previous one minus `rel_slack` of its size."""
        values = self.surrogates
        return all(after >= before - rel_slack * abs(before) for before, after in zip(values, values[1:]))

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {"status": self.status, "records": [record.to_dict() for record in self.records]}


@dataclasses.dataclass(frozen=True)
class OptimizerState:
    """Everything one alternating step reads and writes.

    Attributes
    ----------
    config : hybris.model.SystemConfig
    channels : hybris.model.ChannelRealization
    options : hybris.config.SolverOptions
    solution : hybris.model.Solution
        The current iterate with its true per-user throughput.
    lifted_beam : hybris.subproblems.LiftedBeam
    lifted_phase : hybris.subproblems.LiftedPhase
    aux : typing.Optional[hybris.fractional.FpAuxiliaries]
        Auxiliaries `surrogate` is measured under; `builtins.None` before the first step.
    surrogate : builtins.float
        Surrogate value at `solution` under `aux` (the true throughput before the first step).
    iteration : builtins.int
    rejected_blocks : typing.Tuple[builtins.str, ...]
        Blocks the last step rejected every candidate for.
    """

    config: model.SystemConfig
    channels: model.ChannelRealization
    options: config_.SolverOptions
    solution: model.Solution
    lifted_beam: subproblems.LiftedBeam
    lifted_phase: subproblems.LiftedPhase
    aux: typing.Optional[fractional.FpAuxiliaries] = None
    surrogate: float = 0.0
    iteration: int = 0
    rejected_blocks: typing.Tuple[str, ...] = ()

    @property
    def phases(self) -> model.HybridPhaseConfig:
        return self.solution.phases

    @property
    def beams(self) -> model.BeamformerSet:
        return self.solution.beams

    @property
    def delivery_time(self) -> float:
        return self.solution.delivery_time


def _log_skipped(exc: errors.HybrisError, /) -> None:
    _LOGGER.debug("Skipping candidate: %s", exc)


def _make_solution(
    config: model.SystemConfig,
    rows: npt.NDArray[np.complex128],
    phases: model.HybridPhaseConfig,
    beams: model.BeamformerSet,
    delivery_time: float,
    /,
) -> model.Solution:
    gammas = model.sinr(rows, beams, config.noise_powers)
    return model.Solution(phases, beams, delivery_time, model.throughput(gammas, config.frame_time, delivery_time))


def _meets_constraints(
    config: model.SystemConfig,
    rows: npt.NDArray[np.complex128],
    beams: model.BeamformerSet,
    delivery_time: float,
    tolerance: float,
    /,
) -> bool:
    energy = model.energy_used(delivery_time, config.delivery_power, beams, config.frame_time)
    if energy > config.energy_budget + tolerance * max(1.0, config.energy_budget):
        return False

    gammas = model.sinr(rows, beams, config.noise_powers)
    min_rates = np.asarray(config.min_rates)
    rates = model.throughput(gammas, config.frame_time, delivery_time)
    return bool(np.all(rates >= min_rates - tolerance * np.maximum(1.0, min_rates)))


def _matched_filter(rows: npt.NDArray[np.complex128], power: float, /) -> model.BeamformerSet:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    directions = np.divide(np.conj(rows), norms, out=np.zeros_like(rows), where=norms > 0)
    return model.BeamformerSet(math.sqrt(power / rows.shape[0]) * directions)


def _zero_forcing(rows: npt.NDArray[np.complex128], power: float, /) -> typing.Optional[model.BeamformerSet]:
    users, antennas = rows.shape
    if users > antennas:
        return None

    directions = np.linalg.pinv(rows).T
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    if not np.all(norms > 0) or not np.all(np.isfinite(directions)):
        return None

    return model.BeamformerSet(math.sqrt(power / users) * directions / norms)


class AlternatingOptimizer:
    """Alternating optimiser bound to one system and channel realization.

    Parameters
    ----------
    config : hybris.model.SystemConfig
    channels : hybris.model.ChannelRealization

    Other Parameters
    ----------------
    options : typing.Optional[hybris.config.SolverOptions]
        Defaults to `hybris.config.SolverOptions()`.

    Raises
    ------
    hybris.errors.ConfigurationError
        If the channels don't match the config's dimensions.
    """

    __slots__ = ("_channels", "_config", "_options")

    def __init__(
        self,
        config: model.SystemConfig,
        channels: model.ChannelRealization,
        /,
        *,
        options: typing.Optional[config_.SolverOptions] = None,
    ) -> None:
        channels.validate_against(config)
        self._channels = channels
        self._config = config
        self._options = options or config_.SolverOptions()

    @classmethod
    def from_state(cls, state: OptimizerState, /) -> AlternatingOptimizer:
        return cls(state.config, state.channels, options=state.options)

    @property
    def config(self) -> model.SystemConfig:
        return self._config

    @property
    def channels(self) -> model.ChannelRealization:
        return self._channels

    @property
    def options(self) -> config_.SolverOptions:
        return self._options

    def _start_candidates(
        self, phases: model.HybridPhaseConfig, rows: npt.NDArray[np.complex128], delivery_time: float, /
    ) -> typing.Iterator[typing.Tuple[str, model.BeamformerSet]]:
        power = _INITIAL_POWER_FRACTION * subproblems.transmit_budget(self._config, delivery_time)
        yield "matched-filter", _matched_filter(rows, power)

        if (beams := _zero_forcing(rows, power)) is not None:
            yield "zero-forcing", beams

        minimum_power: typing.Optional[model.BeamformerSet] = None
        with retry.ErrorRouter().route(errors.InfeasibleError, errors.SolverFailedError, handler=_log_skipped):
            minimum_power = subproblems.solve_minimum_power(
                self._channels, phases, delivery_time, self._config, options=self._options
            )

        if minimum_power is not None:
            yield "minimum-power", minimum_power

    def initialize(self, rng: np.random.Generator, /) -> OptimizerState:
        """Draw a feasible starting point.

        The fixed phases are drawn once; the coherent phases are redrawn up to
        `options.init_retries` more times until one of the start candidates
        (matched filter, zero forcing, minimum power) meets the energy and
        rate constraints at `t₀ = b·N_coh/R_F`.

        Raises
        ------
        hybris.errors.InitializationInfeasibleError
            If the delivery time alone breaks the frame or the energy budget
            or if no draw gave a feasible candidate.
        """
        config = self._config
        delivery_time = config.min_delivery_time
        if delivery_time >= config.frame_time:
            raise errors.InitializationInfeasibleError(
                f"delivering {config.n_coherent} phases takes {delivery_time:.4g} s of a {config.frame_time} s frame"
            )

        if config.energy_budget < config.delivery_power * delivery_time:
            raise errors.InitializationInfeasibleError("the energy budget can't cover the phase delivery")

        theta_fixed = rng.uniform(0.0, 2.0 * math.pi, config.n_fixed)
        tolerance = self._options.feasibility_tol
        retries = retry.Retry(self._options.init_retries)
        for attempt in retries:
            phases = model.HybridPhaseConfig(rng.uniform(0.0, 2.0 * math.pi, config.n_coherent), theta_fixed)
            rows = model.effective_channels(self._channels, phases)
            for name, beams in self._start_candidates(phases, rows, delivery_time):
                if not _meets_constraints(config, rows, beams, delivery_time, tolerance):
                    _LOGGER.debug("Start candidate %s of draw %s breaks a constraint", name, attempt)
                    continue

                _LOGGER.debug("Starting from the %s candidate of draw %s", name, attempt)
                solution = _make_solution(config, rows, phases, beams, delivery_time)
                return OptimizerState(
                    config=config,
                    channels=self._channels,
                    options=self._options,
                    solution=solution,
                    lifted_beam=subproblems.LiftedBeam.from_beams(beams),
                    lifted_phase=subproblems.LiftedPhase.from_phases(phases.theta_coherent),
                    surrogate=solution.objective,
                )

            # Redrawing changes nothing without coherent elements.
            if config.n_coherent == 0:
                retries.finish()

        raise errors.InitializationInfeasibleError(
            f"no feasible start after {retries.attempts} phase draw(s)", attempts=retries.attempts
        )

    def _surrogate(
        self,
        aux: fractional.FpAuxiliaries,
        phases: model.HybridPhaseConfig,
        beams: model.BeamformerSet,
        delivery_time: float,
        /,
    ) -> float:
        f = fractional.surrogate_f(self._channels, phases, beams, aux.rho, aux.eta, self._config.noise_powers)
        return fractional.surrogate_objective(aux.rho, f, self._config.frame_time, delivery_time)

    def _pick(
        self,
        candidates: typing.Iterable[typing.Tuple[str, model.HybridPhaseConfig, model.BeamformerSet]],
        aux: fractional.FpAuxiliaries,
        delivery_time: float,
        floor: float,
        block: str,
        /,
    ) -> typing.Optional[typing.Tuple[model.HybridPhaseConfig, model.BeamformerSet, float]]:
        best: typing.Optional[typing.Tuple[model.HybridPhaseConfig, model.BeamformerSet, float]] = None
        threshold = floor - _SURROGATE_SLACK * max(1.0, abs(floor))
        for name, phases, beams in candidates:
            rows = model.effective_channels(self._channels, phases)
            if not _meets_constraints(self._config, rows, beams, delivery_time, self._options.feasibility_tol):
                _LOGGER.debug("Rejected %s %s candidate as it breaks a constraint", name, block)
                continue

            value = self._surrogate(aux, phases, beams, delivery_time)
            if value < threshold:
                _LOGGER.debug(
                    "Rejected %s %s candidate as it lowers the surrogate (%.9g < %.9g)", name, block, value, floor
                )
                continue

            if best is None or value > best[2]:
                best = (phases, beams, value)

        return best

    def _scale_power(
        self,
        phases: model.HybridPhaseConfig,
        beams: model.BeamformerSet,
        delivery_time: float,
        floor: float,
        /,
    ) -> typing.Optional[typing.Tuple[model.BeamformerSet, fractional.FpAuxiliaries, float]]:
        """Scale every beam by one factor up to the transmit budget.

        This raises every SINR, so the true throughput (which the refreshed
        surrogate equals) can't fall below the surrogate `floor` it's
        compared against.
        """
        config = self._config
        budget = subproblems.transmit_budget(config, delivery_time)
        power = beams.total_power
        if not power > 0 or power >= budget * (1.0 - _POWER_SLACK):
            return None

        scaled = beams.scaled_to(budget)
        rows = model.effective_channels(self._channels, phases)
        if not _meets_constraints(config, rows, scaled, delivery_time, self._options.feasibility_tol):
            _LOGGER.debug("Rejected scaling the beams to the budget as it breaks a constraint")
            return None

        aux = fractional.refresh(fractional.beam_gains(rows, scaled), config.noise_powers)
        value = self._surrogate(aux, phases, scaled, delivery_time)
        if value < floor - _SURROGATE_SLACK * max(1.0, abs(floor)):
            return None

        _LOGGER.debug("Scaled the beams from %.6g W to the %.6g W budget", power, budget)
        return scaled, aux, value

    def step(self, state: OptimizerState, /, *, rank_penalty: typing.Optional[float] = None) -> OptimizerState:
        """Run one outer iteration from a feasible state.

        Other Parameters
        ----------------
        rank_penalty : typing.Optional[builtins.float]
            First rank-coupling penalty weight of any penalised re-solve this
            iteration runs, defaults to `options.rank_penalty`.

        Raises
        ------
        hybris.errors.HybrisError
            Any subproblem error, with `block` set to the block it came from.
        """
        config = self._config
        phases, beams = state.phases, state.beams
        rejected: typing.List[str] = []

        with retry.ErrorRouter(AUXILIARIES_BLOCK):
            rows = model.effective_channels(self._channels, phases)
            aux = fractional.refresh(fractional.beam_gains(rows, beams), config.noise_powers)

        with retry.ErrorRouter(DELIVERY_TIME_BLOCK):
            gammas = model.sinr(rows, beams, config.noise_powers)
            delivery_time = subproblems.solve_delivery_time(config, gammas, beams.total_power)

        current = self._surrogate(aux, phases, beams, delivery_time)
        with retry.ErrorRouter(BEAMFORMING_BLOCK):
            lifted_beam = subproblems.solve_beamforming(
                self._channels,
                phases,
                delivery_time,
                aux,
                subproblems.LiftedBeam.from_beams(beams),
                config,
                options=self._options,
                rank_penalty=rank_penalty,
            )
            candidates = [
                ("vector", phases, lifted_beam.vector_beams()),
                ("principal", phases, lifted_beam.principal_beams()),
                ("matched", phases, lifted_beam.matched_beams(rows)),
            ]
            if picked := self._pick(candidates, aux, delivery_time, current, BEAMFORMING_BLOCK):
                _, beams, current = picked

            else:
                rejected.append(BEAMFORMING_BLOCK)

        lifted_phase = subproblems.LiftedPhase.from_phases(phases.theta_coherent)
        if config.n_coherent:
            with retry.ErrorRouter(PHASE_BLOCK):
                lifted_phase = subproblems.solve_phase(
                    self._channels,
                    phases,
                    subproblems.LiftedBeam.from_beams(beams),
                    delivery_time,
                    aux,
                    lifted_phase,
                    config,
                    options=self._options,
                    rank_penalty=rank_penalty,
                )
                phase_candidates = []
                for name, lifted in (("vector", lifted_phase), ("principal", lifted_phase.principal())):
                    with retry.ErrorRouter().route(errors.ExtractionDegenerateError, handler=_log_skipped):
                        phase_candidates.append((name, phases.with_coherent(subproblems.extract_phases(lifted)), beams))

                if picked := self._pick(phase_candidates, aux, delivery_time, current, PHASE_BLOCK):
                    phases, _, current = picked

                else:
                    rejected.append(PHASE_BLOCK)

        with retry.ErrorRouter(POWER_BLOCK):
            if scaled := self._scale_power(phases, beams, delivery_time, current):
                beams, aux, current = scaled

        rows = model.effective_channels(self._channels, phases)
        return dataclasses.replace(
            state,
            solution=_make_solution(config, rows, phases, beams, delivery_time),
            lifted_beam=subproblems.LiftedBeam.from_beams(beams),
            lifted_phase=lifted_phase,
            aux=aux,
            surrogate=current,
            iteration=state.iteration + 1,
            rejected_blocks=tuple(rejected),
        )

    def _record(self, state: OptimizerState, wall_time: float, /) -> IterationRecord:
        report = model.check_feasibility(
            state.solution, self._config, self._channels, tolerance=self._options.feasibility_tol
        )
        return IterationRecord(
            iteration=state.iteration,
            surrogate=state.surrogate,
            throughput=state.solution.objective,
            delivery_time=state.delivery_time,
            energy_slack=report.energy_slack,
            min_rate_slack=report.min_rate_slack,
            wall_time=wall_time,
            rejected_blocks=state.rejected_blocks,
        )

    def solve(
        self, rng: typing.Optional[np.random.Generator] = None, /
    ) -> typing.Tuple[model.Solution, SolveTrace]:
        """Initialize then iterate until the true throughput settles or the iteration cap is hit.

        Parameters
        ----------
        rng : typing.Optional[numpy.random.Generator]
            Stream the start is drawn from, defaults to one seeded with
            `options.seed`.

        Returns
        -------
        typing.Tuple[hybris.model.Solution, SolveTrace]
            The iterate with the highest true throughput and the trace, whose
            status is `"converged"` or `"max-iters"`.

        Raises
        ------
        hybris.errors.InitializationInfeasibleError
            If no feasible start was found.
        hybris.errors.HybrisError
            Any subproblem error, with `block` set.
        """
        options = self._options
        if rng is None:
            rng = np.random.default_rng(options.seed)

        trace = SolveTrace()
        started = time.perf_counter()
        state = self.initialize(rng)
        trace.records.append(self._record(state, time.perf_counter() - started))
        best = state.solution
        _LOGGER.info(
            "Starting alternating solve for %s users and %s coherent elements at %.6g bits",
            self._config.users,
            self._config.n_coherent,
            state.surrogate,
        )

        trace.status = "max-iters"
        for _ in range(options.max_outer_iters):
            started = time.perf_counter()
            previous = state.solution.objective
            state = self.step(state)
            trace.records.append(self._record(state, time.perf_counter() - started))
            if state.solution.objective > best.objective:
                best = state.solution

            if abs(state.solution.objective - previous) / max(abs(previous), 1e-12) < options.rel_tol:
                trace.status = "converged"
                break

        _LOGGER.info(
            "Alternating solve finished as %s after %s iteration(s) at %.6g bits",
            trace.status,
            trace.iterations,
            best.objective,
        )
        return best, trace


def initialize(
    config: model.SystemConfig,
    channels: model.ChannelRealization,
    rng: np.random.Generator,
    /,
    *,
    options: typing.Optional[config_.SolverOptions] = None,
) -> typing.Tuple[model.Solution, subproblems.LiftedBeam, subproblems.LiftedPhase]:
    """Draw a feasible starting point, see `AlternatingOptimizer.initialize`."""
    state = AlternatingOptimizer(config, channels, options=options).initialize(rng)
    return state.solution, state.lifted_beam, state.lifted_phase


def step(state: OptimizerState, /, *, rank_penalty: typing.Optional[float] = None) -> OptimizerState:
    """Run one outer iteration, see `AlternatingOptimizer.step`."""
    return AlternatingOptimizer.from_state(state).step(state, rank_penalty=rank_penalty)


def solve(
    config: model.SystemConfig,
    channels: model.ChannelRealization,
    options: typing.Optional[config_.SolverOptions] = None,
    /,
    *,
    rng: typing.Optional[np.random.Generator] = None,
) -> typing.Tuple[model.Solution, SolveTrace]:
    """Solve one instance end to end, see `AlternatingOptimizer.solve`."""
    return AlternatingOptimizer(config, channels, options=options).solve(rng)
