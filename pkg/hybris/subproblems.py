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
"""Per-block subproblems of the alternating optimiser.

The delivery time block is a one dimensional linear program solved in closed
form. The beamforming and phase blocks are semidefinite relaxations over a
Hermitian matrix `X` standing in for `x xᴴ`. A relaxation which comes back
above rank one is re-solved with `x` carried next to `X` through the joint
PSD variable `[[X, x], [xᴴ, 1]]` (so `X ⪰ x xᴴ`), the reverse inequality
`Tr X ≤ ‖x‖²` being replaced by its touching affine minorant around the last
principal component and priced by a penalty whose weight grows each round.

Every program is solved on noise-normalised channels (`h_k/δ_k`) so the
noise power inside the cones is one; the multipliers are rescaled to match
(`η_k·δ_k`). Beam matrices are solved for in units of the transmit budget and
objectives are divided by `Σ_k (1 + ρ_k)`.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "LiftedBeam",
    "LiftedPhase",
    "build_h1",
    "extract_phases",
    "linearize_trace",
    "rate_thresholds",
    "solve_beamforming",
    "solve_delivery_time",
    "solve_minimum_power",
    "solve_phase",
    "transmit_budget",
]

import dataclasses
import itertools
import logging
import math
import typing

import cvxpy as cp
import numpy as np

from . import config as config_
from . import errors
from . import fractional
from . import model
from . import retry

if typing.TYPE_CHECKING:
    import numpy.typing as npt

    _ComplexArray = npt.NDArray[np.complex128]
    _FloatArray = npt.NDArray[np.float64]

_LOGGER = logging.getLogger(__name__)

_SOLVED_STATUSES = frozenset((cp.OPTIMAL, cp.OPTIMAL_INACCURATE))
_DEGENERATE_ANCHOR = 1e-9


def _hermitian_part(matrix: npt.ArrayLike, /) -> _ComplexArray:
    array = np.asarray(matrix, dtype=np.complex128)
    return (array + array.conj().swapaxes(-1, -2)) / 2.0


def _principal(matrix: _ComplexArray, reference: _ComplexArray, /) -> _ComplexArray:
    values, vectors = np.linalg.eigh(matrix)
    vector = math.sqrt(max(float(values[-1]), 0.0)) * vectors[:, -1]
    # Align the arbitrary eigenvector phase with the reference vector.
    overlap = np.vdot(vector, reference)
    if abs(overlap) > 0:
        vector = vector * (overlap / abs(overlap))

    return vector


@dataclasses.dataclass(frozen=True)
class LiftedBeam:
    """Lifted beamforming block: a PSD matrix and a vector per user.

    Attributes
    ----------
    matrices : numpy.ndarray
        `K × M × M` Hermitian matrices `W_k`.
    vectors : numpy.ndarray
        `K × M` vectors `w_k`.
    objective : typing.Optional[builtins.float]
        Value of the program this came from, if it came from a solve.
    """

    matrices: _ComplexArray
    vectors: _ComplexArray
    objective: typing.Optional[float] = None

    def __post_init__(self) -> None:
        matrices = _hermitian_part(self.matrices)
        vectors = np.array(self.vectors, dtype=np.complex128)
        if matrices.ndim != 3 or vectors.ndim != 2 or matrices.shape[:2] != vectors.shape:
            raise errors.ConfigurationError("lifted beam matrices must be K x M x M next to K x M vectors")

        matrices.setflags(write=False)
        vectors.setflags(write=False)
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_beams(cls, beams: model.BeamformerSet, /) -> LiftedBeam:
        """Return the rank-one lift `W_k = w_k w_kᴴ` of a beam set."""
        vectors = beams.vectors
        return cls(np.einsum("ka,kb->kab", vectors, vectors.conj()), vectors)

    @property
    def rank_gaps(self) -> _FloatArray:
        """`Tr W_k − ‖w_k‖²` per user; zero exactly when the lift is rank one."""
        return np.real(np.trace(self.matrices, axis1=1, axis2=2)) - np.sum(np.abs(self.vectors) ** 2, axis=1)

    def vector_beams(self) -> model.BeamformerSet:
        """The vector part of the lift as a beam set."""
        return model.BeamformerSet(self.vectors)

    def principal_beams(self) -> model.BeamformerSet:
        """Scaled principal eigenvectors of each `W_k`, phase aligned with `w_k`."""
        return model.BeamformerSet(
            np.array([_principal(matrix, vector) for matrix, vector in zip(self.matrices, self.vectors)])
        )

    def matched_beams(self, rows: npt.ArrayLike, /) -> model.BeamformerSet:
        """Per-user beams `W_k h_k / √(h_kᴴ W_k h_k)` for the effective channel rows `h_kᴴ`.

        Each keeps its own user's gain `h_kᴴ W_k h_k` at no more power than
        `Tr W_k`; users whose gain is zero get a zero beam.

        Raises
        ------
        hybris.errors.ConfigurationError
            If `rows` isn't `K × M`.
        """
        rows = np.asarray(rows, dtype=np.complex128)
        if rows.shape != self.vectors.shape:
            raise errors.ConfigurationError(f"expected {self.vectors.shape} channel rows, got {rows.shape}")

        directions = np.einsum("kab,kb->ka", self.matrices, rows.conj())
        gains = np.real(np.einsum("ka,ka->k", rows, directions))
        scale = np.divide(1.0, np.sqrt(np.maximum(gains, 0.0)), out=np.zeros_like(gains), where=gains > 0)
        return model.BeamformerSet(directions * scale[:, np.newaxis])


@dataclasses.dataclass(frozen=True)
class LiftedPhase:
    """Lifted phase block.

    `vector` stores conjugate coherent phasors followed by an anchor entry,
    `o = [e^{−jθ_1}, …, e^{−jθ_N}, 1]`, so that `oᴴ H_{1,k} w = h_kᴴ w`.

    Attributes
    ----------
    matrix : numpy.ndarray
        `(N_coh + 1) × (N_coh + 1)` Hermitian matrix `O`.
    vector : numpy.ndarray
        Length `N_coh + 1` vector `o`.
    objective : typing.Optional[builtins.float]
        Value of the program this came from, if it came from a solve.
    """

    matrix: _ComplexArray
    vector: _ComplexArray
    objective: typing.Optional[float] = None

    def __post_init__(self) -> None:
        matrix = _hermitian_part(self.matrix)
        vector = np.array(self.vector, dtype=np.complex128).reshape(-1)
        if matrix.shape != (vector.size, vector.size) or vector.size < 1:
            raise errors.ConfigurationError("lifted phase matrix must be square and match its vector")

        matrix.setflags(write=False)
        vector.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "vector", vector)

    @classmethod
    def from_phases(cls, theta_coherent: npt.ArrayLike, /) -> LiftedPhase:
        """Return the rank-one lift of a coherent phase vector."""
        vector = np.append(np.exp(-1j * np.asarray(theta_coherent, dtype=np.float64)), 1.0 + 0j)
        return cls(np.outer(vector, vector.conj()), vector)

    @property
    def n_coherent(self) -> int:
        return self.vector.size - 1

    @property
    def rank_gap(self) -> float:
        """`Tr O − ‖o‖²`."""
        return float(np.real(np.trace(self.matrix)) - np.sum(np.abs(self.vector) ** 2))

    def principal(self) -> LiftedPhase:
        """Rank-one lift built from the scaled principal eigenvector of `O`."""
        vector = _principal(self.matrix, self.vector)
        return LiftedPhase(np.outer(vector, vector.conj()), vector)


def transmit_budget(config: model.SystemConfig, delivery_time: float, /) -> float:
    """Largest `Σ‖w_k‖²` the energy budget allows for a delivery time.

    Raises
    ------
    hybris.errors.DomainError
        If no transmission time is left.
    """
    remaining = config.frame_time - delivery_time
    if not remaining > 0:
        raise errors.DomainError("no transmission time is left in the frame")

    return (config.energy_budget - config.delivery_power * delivery_time) / remaining


def rate_thresholds(config: model.SystemConfig, delivery_time: float, /) -> _FloatArray:
    """Per-user SINR thresholds `2^{R_min_k/(T − t)} − 1` implied by the rate floors.

    Raises
    ------
    hybris.errors.DomainError
        If no transmission time is left.
    """
    remaining = config.frame_time - delivery_time
    if not remaining > 0:
        raise errors.DomainError("no transmission time is left in the frame")

    with np.errstate(over="ignore"):
        return np.expm1(np.asarray(config.min_rates) / remaining * math.log(2.0))


def solve_delivery_time(config: model.SystemConfig, gammas: npt.ArrayLike, total_power: float, /) -> float:
    """Solve the delivery-time linear program in closed form.

    With the SINRs and the transmit power held at the current iterate the
    throughput falls with `t`, so the smallest feasible `t` is returned: the
    largest lower bound out of the delivery-bit budget and (when
    `p < Σ‖w‖²`) the energy budget, checked against the upper bounds from
    every rate floor, the energy budget (when `p > Σ‖w‖²`) and `T`.

    Parameters
    ----------
    config : hybris.model.SystemConfig
    gammas : numpy.typing.ArrayLike
        Current per-user SINR.
    total_power : builtins.float
        Current `Σ_k ‖w_k‖²` in watts.

    Returns
    -------
    builtins.float
        Delivery time in seconds.

    Raises
    ------
    hybris.errors.SubproblemInfeasibleError
        If the bounds cross, carrying both of them.
    """
    gammas = np.asarray(gammas, dtype=np.float64)
    lower = [0.0, config.min_delivery_time]
    upper = [config.frame_time]

    energy_margin = config.energy_budget - config.frame_time * total_power
    power_gap = config.delivery_power - total_power
    if power_gap < 0:
        lower.append(energy_margin / power_gap)

    elif power_gap > 0:
        upper.append(energy_margin / power_gap)

    # With p == Σ‖w‖² the energy constraint no longer involves t.
    elif energy_margin < 0:
        raise errors.SubproblemInfeasibleError(
            "transmit power equals delivery power but exceeds the energy budget", lower=max(lower), upper=-math.inf
        )

    for gamma, min_rate in zip(gammas, config.min_rates):
        if min_rate <= 0:
            continue

        rate = math.log2(1.0 + gamma) if gamma > 0 else 0.0
        upper.append(config.frame_time - min_rate / rate if rate > 0 else -math.inf)

    lowest, highest = max(lower), min(upper)
    if lowest > highest + 1e-12 * max(1.0, config.frame_time):
        raise errors.SubproblemInfeasibleError(
            f"delivery time bounds cross: {lowest} > {highest}", lower=lowest, upper=highest
        )

    return min(lowest, highest)


@typing.overload
def linearize_trace(previous: npt.ArrayLike, value: cp.Expression, /) -> cp.Expression:
    ...


@typing.overload
def linearize_trace(previous: npt.ArrayLike, value: npt.ArrayLike, /) -> float:
    ...


def linearize_trace(
    previous: npt.ArrayLike, value: typing.Union[cp.Expression, npt.ArrayLike], /
) -> typing.Union[cp.Expression, float]:
    """Affine minorant of `‖x‖²` around `previous`: `2Re⟨x_prev, x⟩ − ‖x_prev‖²`.

    This works on both numeric arrays and cvxpy expressions, touches
    `‖x‖²` at `x = x_prev` and lies below it everywhere else.

    Raises
    ------
    hybris.errors.ConfigurationError
        If the shapes don't match.
    """
    previous = np.asarray(previous, dtype=np.complex128)
    shape = value.shape if isinstance(value, cp.Expression) else np.shape(value)
    if tuple(shape) != previous.shape:
        raise errors.ConfigurationError(f"expansion point shape {previous.shape} doesn't match {tuple(shape)}")

    offset = float(np.sum(np.abs(previous) ** 2))
    if isinstance(value, cp.Expression):
        return 2.0 * cp.real(cp.sum(cp.multiply(np.conj(previous), value))) - offset

    return 2.0 * float(np.real(np.vdot(previous, np.asarray(value, dtype=np.complex128)))) - offset


def _solver_kwargs(solver: str, tolerance: float, /) -> typing.Dict[str, typing.Any]:
    if solver == cp.CLARABEL:
        return {"tol_gap_abs": tolerance, "tol_gap_rel": tolerance, "tol_feas": tolerance, "max_iter": 500}

    if solver == cp.SCS:
        # SCS is first order and stalls well short of interior point accuracy.
        loose = max(tolerance, 1e-7)
        return {"eps_abs": loose, "eps_rel": loose, "max_iters": 100_000}

    return {}


@dataclasses.dataclass(frozen=True)
class _Outcome:
    value: float
    accurate: bool
    solver: str
    values: typing.Mapping[int, typing.Any]

    def __getitem__(self, variable: cp.Variable, /) -> typing.Any:
        return self.values[variable.id]


def _solve(problem: cp.Problem, options: config_.SolverOptions, name: str, /) -> _Outcome:
    installed = set(cp.installed_solvers())
    inaccurate: typing.Optional[_Outcome] = None
    maybe_infeasible = False
    for solver in options.solver_chain:
        if solver not in installed:
            _LOGGER.warning("Skipping conic solver %s for the %s program as it isn't installed", solver, name)
            continue

        try:
            problem.solve(solver=solver, **_solver_kwargs(solver, options.conic_tol))

        except cp.SolverError as exc:
            _LOGGER.warning("Conic solver %s failed on the %s program: %s", solver, name, exc)
            continue

        status = problem.status
        if status == cp.INFEASIBLE:
            raise errors.SubproblemInfeasibleError(f"the {name} program is infeasible")

        if status == cp.INFEASIBLE_INACCURATE:
            _LOGGER.warning("Conic solver %s found the %s program possibly infeasible", solver, name)
            maybe_infeasible = True
            continue

        if status in _SOLVED_STATUSES and problem.value is not None:
            outcome = _Outcome(
                float(problem.value),
                status == cp.OPTIMAL,
                solver,
                {variable.id: variable.value for variable in problem.variables()},
            )
            if outcome.accurate:
                return outcome

            _LOGGER.warning("Conic solver %s returned an inaccurate solution for the %s program", solver, name)
            if inaccurate is None:
                inaccurate = outcome

            continue

        _LOGGER.warning("Conic solver %s returned status %s for the %s program", solver, name, status)

    if inaccurate is not None:
        _LOGGER.warning("Keeping the inaccurate %s solution of the %s program", inaccurate.solver, name)
        return inaccurate

    if maybe_infeasible:
        raise errors.SubproblemInfeasibleError(f"the {name} program is infeasible")

    raise errors.SolverFailedError(f"every configured conic solver failed on the {name} program")


def _falls_short(
    value: float, start_value: typing.Optional[float], outcome: _Outcome, options: config_.SolverOptions, name: str, /
) -> bool:
    if start_value is None:
        return False

    allowed = options.consistency_tol * (1.0 + abs(start_value))
    if value >= start_value - allowed:
        return False

    if outcome.accurate:
        raise errors.InternalConsistencyError(
            f"the {name} program returned {value}, below its starting value {start_value}"
        )

    _LOGGER.warning(
        "Keeping the start of the %s program as its inaccurate optimum %.9g is below the start's %.9g",
        name,
        value,
        start_value,
    )
    return True


def _is_start_feasible(
    gains: _FloatArray, thresholds: _FloatArray, power: float, budget: float, tolerance: float, /
) -> bool:
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    rates_ok = np.all(signal >= thresholds * (interference + 1.0) - tolerance * np.maximum(1.0, thresholds))
    return bool(rates_ok) and power <= budget + tolerance * max(1.0, budget)


def _rank_ratio(matrix: _ComplexArray, /) -> float:
    values = np.linalg.eigvalsh(_hermitian_part(matrix))
    trace = float(np.sum(np.maximum(values, 0.0)))
    if not trace > 0:
        return 0.0

    return 1.0 - max(float(values[-1]), 0.0) / trace


def _penalty_weights(options: config_.SolverOptions, initial: typing.Optional[float], /) -> typing.Iterator[float]:
    weight = options.rank_penalty if initial is None else initial
    if not weight > 0:
        raise errors.ConfigurationError("the rank penalty weight must be positive")

    schedule = retry.ExponentialSchedule(
        base=options.rank_penalty_growth, maximum=options.rank_penalty_max, multiplier=weight
    )
    return itertools.islice(schedule, options.rank_rounds)


def _objective_norm(rho: _FloatArray, /) -> float:
    # At tight auxiliaries f_k is at most 1 + ρ_k.
    return max(1.0, float(np.sum(1.0 + rho)))


def _fp_terms(
    signals: typing.Sequence[cp.Expression],
    totals: typing.Sequence[cp.Expression],
    rho: _FloatArray,
    eta: _FloatArray,
    /,
) -> cp.Expression:
    return cp.sum(
        cp.hstack(
            [
                2.0 * eta[k] * math.sqrt(1.0 + rho[k]) * signals[k] - eta[k] ** 2 * (totals[k] + 1.0)
                for k in range(rho.size)
            ]
        )
    )


def _rate_floors(
    gains: typing.Sequence[typing.Sequence[cp.Expression]],
    totals: typing.Sequence[cp.Expression],
    thresholds: _FloatArray,
    /,
) -> typing.List[cp.Constraint]:
    if not np.all(np.isfinite(thresholds)):
        raise errors.SubproblemInfeasibleError("a rate floor can't be met in the time left")

    return [
        gains[k][k] >= thresholds[k] * (totals[k] - gains[k][k] + 1.0)
        for k in range(thresholds.size)
        if thresholds[k] > 0
    ]


def _log_round_failure(exc: errors.HybrisError, /) -> None:
    _LOGGER.debug("Keeping the previous round as a penalised re-solve failed: %s", exc)


def _normalised_rows(rows: npt.ArrayLike, noise_powers: typing.Sequence[float], /) -> _ComplexArray:
    return np.asarray(rows, dtype=np.complex128) / np.sqrt(np.asarray(noise_powers, dtype=np.float64))[:, np.newaxis]


def _beam_program(
    couplings: typing.Sequence[_ComplexArray],
    thresholds: _FloatArray,
    rho: _FloatArray,
    eta: _FloatArray,
    norm: float,
    /,
    *,
    anchors: typing.Optional[_ComplexArray] = None,
    weight: float = 0.0,
) -> typing.Tuple[cp.Problem, typing.List[cp.Variable]]:
    users = len(couplings)
    antennas = couplings[0].shape[0]
    size = antennas if anchors is None else antennas + 1
    lifts = [cp.Variable((size, size), hermitian=True) for _ in range(users)]
    matrices = [lift[:antennas, :antennas] for lift in lifts]
    gains = [[cp.real(cp.trace(couplings[k] @ matrices[i])) for i in range(users)] for k in range(users)]
    totals = [cp.sum(cp.hstack(row)) for row in gains]

    constraints: typing.List[cp.Constraint] = [lift >> 0 for lift in lifts]
    constraints.extend(_rate_floors(gains, totals, thresholds))
    constraints.append(cp.sum(cp.hstack([cp.real(cp.trace(matrix)) for matrix in matrices])) <= 1)
    objective = _fp_terms([cp.sqrt(gains[k][k]) for k in range(users)], totals, rho, eta) / norm
    if anchors is not None:
        constraints.extend(cp.real(lift[antennas, antennas]) == 1 for lift in lifts)
        gaps = [
            cp.real(cp.trace(matrices[k])) - linearize_trace(anchors[k], lifts[k][:antennas, antennas])
            for k in range(users)
        ]
        objective = objective - weight * cp.sum(cp.hstack(gaps))

    return cp.Problem(cp.Maximize(objective), constraints), lifts


def solve_beamforming(
    channels: model.ChannelRealization,
    phases: model.HybridPhaseConfig,
    delivery_time: float,
    aux: fractional.FpAuxiliaries,
    previous: LiftedBeam,
    config: model.SystemConfig,
    /,
    *,
    options: typing.Optional[config_.SolverOptions] = None,
    rank_penalty: typing.Optional[float] = None,
) -> LiftedBeam:
    """Solve the lifted beamforming program around `previous`.

    Maximises `Σ_k f̄_k` (the surrogate with `t`, `ρ`, `η` and the phases held)
    subject to the energy budget, every rate floor written as a linear SINR
    constraint on the lifted matrices and `W_k ⪰ 0`. When that relaxation
    comes back above rank one it's re-solved with the joint lift
    `[[W_k, w_k], [w_kᴴ, 1]] ⪰ 0` and the linearised rank coupling, around
    the relaxation's principal components, priced by a growing penalty.

    Parameters
    ----------
    channels : hybris.model.ChannelRealization
    phases : hybris.model.HybridPhaseConfig
    delivery_time : builtins.float
    aux : hybris.fractional.FpAuxiliaries
    previous : LiftedBeam
        The current beams; its vectors are the starting point the optimum
        is checked against and the phase reference of the returned vectors.
    config : hybris.model.SystemConfig

    Other Parameters
    ----------------
    options : typing.Optional[hybris.config.SolverOptions]
        Solver settings, defaults to `hybris.config.SolverOptions()`.
    rank_penalty : typing.Optional[builtins.float]
        First weight of the rank-coupling penalty, defaults to `options.rank_penalty`.

    Returns
    -------
    LiftedBeam
        The program's optimiser. `objective` is the relaxation's value of
        `Σ_k f̄_k` (noise normalised), which is never below the value at a
        feasible `previous`. When an inaccurate solve fell below that value
        `previous` itself is returned with its own value.

    Raises
    ------
    hybris.errors.SubproblemInfeasibleError
        If the conic solver reports infeasibility.
    hybris.errors.InternalConsistencyError
        If an accurate optimum is below the value at a feasible `previous`.
    hybris.errors.SolverFailedError
        If every configured solver failed.
    """
    options = options or config_.SolverOptions()
    budget = transmit_budget(config, delivery_time)
    if not budget > 0:
        raise errors.SubproblemInfeasibleError("the energy budget leaves no transmit power")

    thresholds = rate_thresholds(config, delivery_time)
    rows = _normalised_rows(model.effective_channels(channels, phases), config.noise_powers)
    eta = aux.scaled_eta(config.noise_powers)
    rho = aux.rho
    norm = _objective_norm(rho)
    # Matrices are solved for in units of the budget so their traces sum to at most one.
    couplings = [budget * np.outer(row.conj(), row) for row in rows]

    start_value: typing.Optional[float] = None
    start_gains = fractional.beam_gains(rows, previous.vectors)
    start_power = float(np.sum(np.abs(previous.vectors) ** 2))
    if _is_start_feasible(start_gains, thresholds, start_power, budget, options.feasibility_tol):
        start_value = float(np.sum(fractional.surrogate_f_from_gains(start_gains, rho, eta, 1.0)))

    problem, lifts = _beam_program(couplings, thresholds, rho, eta, norm)
    relaxed = _solve(problem, options, "beamforming")
    value = relaxed.value * norm
    if _falls_short(value, start_value, relaxed, options, "beamforming"):
        return dataclasses.replace(previous, objective=start_value)

    matrices = budget * np.array([_hermitian_part(relaxed[lift]) for lift in lifts])
    vectors = np.array([_principal(matrix, reference) for matrix, reference in zip(matrices, previous.vectors)])
    antennas = rows.shape[1]
    for weight in _penalty_weights(options, rank_penalty):
        ratio = max(_rank_ratio(matrix) for matrix in matrices)
        if ratio <= options.rank_tol:
            break

        _LOGGER.debug("Beamforming relaxation is %.3g off rank one, re-solving with penalty weight %.3g", ratio, weight)
        problem, lifts = _beam_program(
            couplings, thresholds, rho, eta, norm, anchors=vectors / math.sqrt(budget), weight=weight
        )
        outcome: typing.Optional[_Outcome] = None
        with retry.ErrorRouter().route(errors.SolverFailedError, errors.InfeasibleError, handler=_log_round_failure):
            outcome = _solve(problem, options, "penalised beamforming")

        if outcome is None:
            break

        solved = [outcome[lift] for lift in lifts]
        matrices = budget * np.array([_hermitian_part(lift[:antennas, :antennas]) for lift in solved])
        vectors = math.sqrt(budget) * np.array([lift[:antennas, antennas] for lift in solved])

    total = float(np.sum(np.real(np.trace(matrices, axis1=1, axis2=2))))
    if total > budget:
        matrices = matrices * (budget / total)
        vectors = vectors * math.sqrt(budget / total)

    _LOGGER.debug("Beamforming program value %.9g", value)
    return LiftedBeam(matrices, vectors, objective=value)


def build_h1(channels: model.ChannelRealization, theta_fixed: npt.ArrayLike, user: int, /) -> _ComplexArray:
    """Build the `(N_coh + 1) × M` matrix `H_{1,k}` of one user.

    The top `N_coh` rows are `diag((h_{r,k}^coh)ᴴ) H^coh` and the last row is
    the fixed sub-surface's contribution `(h_{r,k}^fix)ᴴ Θ^fix H^fix`, so
    `oᴴ H_{1,k} w = h_kᴴ w` for `o = [e^{−jθ^coh}, 1]`.

    Raises
    ------
    hybris.errors.ConfigurationError
        On a dimension mismatch.
    """
    theta_fixed = np.asarray(theta_fixed, dtype=np.float64).reshape(-1)
    if theta_fixed.size != channels.n_fixed:
        raise errors.ConfigurationError(f"{theta_fixed.size} fixed phases given for {channels.n_fixed} elements")

    if not 0 <= user < channels.users:
        raise errors.ConfigurationError(f"user index {user} out of range for {channels.users} users")

    top = np.conj(channels.ris_user_coherent[user])[:, np.newaxis] * channels.bs_ris_coherent
    last = (np.conj(channels.ris_user_fixed[user]) * np.exp(1j * theta_fixed)) @ channels.bs_ris_fixed
    return np.vstack((top, last.reshape(1, -1)))


def _phase_program(
    couplings: typing.Sequence[typing.Sequence[_ComplexArray]],
    thresholds: _FloatArray,
    rho: _FloatArray,
    eta: _FloatArray,
    norm: float,
    /,
    *,
    anchor: typing.Optional[_ComplexArray] = None,
    weight: float = 0.0,
) -> typing.Tuple[cp.Problem, cp.Variable]:
    users = len(couplings)
    size = couplings[0][0].shape[0]
    lift = cp.Variable((size, size) if anchor is None else (size + 1, size + 1), hermitian=True)
    matrix = lift[:size, :size]
    gains = [[cp.real(cp.trace(couplings[k][i] @ matrix)) for i in range(users)] for k in range(users)]
    totals = [cp.sum(cp.hstack(row)) for row in gains]

    constraints: typing.List[cp.Constraint] = [
        lift >> 0,
        cp.real(matrix[size - 1, size - 1]) == 1,
        cp.real(cp.diag(matrix)) <= 1,
    ]
    constraints.extend(_rate_floors(gains, totals, thresholds))
    objective = _fp_terms([cp.sqrt(gains[k][k]) for k in range(users)], totals, rho, eta) / norm
    if anchor is not None:
        constraints.append(cp.real(lift[size, size]) == 1)
        gap = cp.real(cp.trace(matrix)) - linearize_trace(anchor, lift[:size, size])
        objective = objective - weight * gap

    return cp.Problem(cp.Maximize(objective), constraints), lift


def _complete_anchor(matrix: _ComplexArray, reference: _ComplexArray, /) -> _ComplexArray:
    vector = _principal(matrix[:-1, :-1], reference[:-1])
    completed = np.array(matrix, dtype=np.complex128)
    completed[:-1, -1] = vector
    completed[-1, :-1] = vector.conj()
    completed[-1, -1] = 1.0
    return completed


def _unit_diagonal(matrix: _ComplexArray, vector: _ComplexArray, /) -> typing.Tuple[_ComplexArray, _ComplexArray]:
    # A diagonal congruence keeps O ⪰ o oᴴ while pinning the anchor to one and capping every other entry at one.
    diagonal = np.real(np.diag(matrix))
    scale = 1.0 / np.sqrt(np.maximum(diagonal, 1.0))
    if diagonal[-1] > 0:
        scale[-1] = 1.0 / math.sqrt(diagonal[-1])

    return scale[:, np.newaxis] * matrix * scale[np.newaxis, :], scale * vector


def solve_phase(
    channels: model.ChannelRealization,
    phases: model.HybridPhaseConfig,
    beams: LiftedBeam,
    delivery_time: float,
    aux: fractional.FpAuxiliaries,
    previous: LiftedPhase,
    config: model.SystemConfig,
    /,
    *,
    options: typing.Optional[config_.SolverOptions] = None,
    rank_penalty: typing.Optional[float] = None,
) -> LiftedPhase:
    """Solve the lifted coherent phase program around `previous`.

    Maximises `Σ_k f̂_k` with `f̂_k` built from `Tr(O H_{1,k} W_i H_{1,k}ᴴ)`
    subject to `diag(O) ≤ 1`, `O[last, last] = 1`, the rate floors at the
    current `t` and `W_k` and `O ⪰ 0`. As with `solve_beamforming` a
    relaxation which comes back above rank one is re-solved with the joint
    lift and a growing penalty on the linearised rank coupling. Only the
    fixed phases of `phases` are used.

    With no coherent elements there is nothing to optimise and `previous` is
    returned unchanged.

    Returns
    -------
    LiftedPhase
        The program's optimiser with `diag(O) ≤ 1` and `O[last, last] = 1`.
        `objective` is the relaxation's value of `Σ_k f̂_k` (noise
        normalised); when an inaccurate solve fell below the value at a
        feasible unit-modulus `previous`, `previous` is returned instead.

    Raises
    ------
    hybris.errors.SubproblemInfeasibleError
        If the conic solver reports infeasibility.
    hybris.errors.InternalConsistencyError
        If an accurate optimum is below the value at a feasible `previous`.
    hybris.errors.SolverFailedError
        If every configured solver failed.
    """
    options = options or config_.SolverOptions()
    size = previous.vector.size
    if size != channels.n_coherent + 1:
        raise errors.ConfigurationError(f"lifted phase of size {size} given for {channels.n_coherent} elements")

    if channels.n_coherent == 0:
        return previous

    thresholds = rate_thresholds(config, delivery_time)
    eta = aux.scaled_eta(config.noise_powers)
    rho = aux.rho
    norm = _objective_norm(rho)
    users = channels.users
    noise_scale = np.sqrt(np.asarray(config.noise_powers, dtype=np.float64))

    # couplings[k][i] = H_{1,k} W_i H_{1,k}ᴴ on noise-normalised channels.
    couplings = []
    for k in range(users):
        h1 = build_h1(channels, phases.theta_fixed, k) / noise_scale[k]
        couplings.append([h1 @ beams.matrices[i] @ h1.conj().T for i in range(users)])

    start = previous.vector
    start_value: typing.Optional[float] = None
    start_gains = np.array(
        [[float(np.real(np.vdot(start, couplings[k][i] @ start))) for i in range(users)] for k in range(users)]
    )
    unit_start = bool(np.all(np.abs(np.abs(start) - 1.0) <= 1e-9))
    if unit_start and _is_start_feasible(start_gains, thresholds, 0.0, 1.0, options.feasibility_tol):
        start_value = float(np.sum(fractional.surrogate_f_from_gains(start_gains, rho, eta, 1.0)))

    problem, lift = _phase_program(couplings, thresholds, rho, eta, norm)
    relaxed = _solve(problem, options, "phase")
    value = relaxed.value * norm
    if _falls_short(value, start_value, relaxed, options, "phase"):
        return dataclasses.replace(previous, objective=start_value)

    matrix = _hermitian_part(relaxed[lift])
    if not any(np.any(coupling[-1]) for row in couplings for coupling in row):
        # With no fixed contribution the anchor row and column enter no gain.
        matrix = _complete_anchor(matrix, start)

    vector = _principal(matrix, start)
    for weight in _penalty_weights(options, rank_penalty):
        ratio = _rank_ratio(matrix)
        if ratio <= options.rank_tol:
            break

        _LOGGER.debug("Phase relaxation is %.3g off rank one, re-solving with penalty weight %.3g", ratio, weight)
        problem, lift = _phase_program(couplings, thresholds, rho, eta, norm, anchor=vector, weight=weight)
        outcome: typing.Optional[_Outcome] = None
        with retry.ErrorRouter().route(errors.SolverFailedError, errors.InfeasibleError, handler=_log_round_failure):
            outcome = _solve(problem, options, "penalised phase")

        if outcome is None:
            break

        solved = outcome[lift]
        matrix = _hermitian_part(solved[:size, :size])
        vector = np.asarray(solved[:size, size], dtype=np.complex128)

    matrix, vector = _unit_diagonal(matrix, vector)
    _LOGGER.debug("Phase program value %.9g", value)
    return LiftedPhase(matrix, vector, objective=value)


def extract_phases(lifted: LiftedPhase, /) -> _FloatArray:
    """Recover the coherent phases from a lifted phase solution.

    `v_n = o_n / o_last` is projected onto the unit circle (entries with
    `|v_n| < 1e−9` get phase 0) and, as `o` holds conjugate phasors, the
    returned angles are `−arg(v_n)` wrapped into `[0, 2π)`.

    Raises
    ------
    hybris.errors.ExtractionDegenerateError
        If `|o_last| < 1e−9`.
    """
    anchor = lifted.vector[-1]
    if abs(anchor) < _DEGENERATE_ANCHOR:
        raise errors.ExtractionDegenerateError(f"lifted phase anchor {abs(anchor):.3g} is too small to extract from")

    ratios = lifted.vector[:-1] / anchor
    angles = np.where(np.abs(ratios) < _DEGENERATE_ANCHOR, 0.0, -np.angle(ratios))
    wrapped = np.mod(angles, 2.0 * math.pi)
    wrapped[wrapped >= 2.0 * math.pi] = 0.0
    return wrapped


def solve_minimum_power(
    channels: model.ChannelRealization,
    phases: model.HybridPhaseConfig,
    delivery_time: float,
    config: model.SystemConfig,
    /,
    *,
    options: typing.Optional[config_.SolverOptions] = None,
) -> model.BeamformerSet:
    """Find the lowest power beams meeting every rate floor at fixed phases and `t`.

    This solves the semidefinite relaxation of the power minimisation and
    returns the scaled principal eigenvector of each `W_k`; the result is a
    candidate starting point and may violate the rate floors when the
    relaxation isn't tight.

    Raises
    ------
    hybris.errors.SubproblemInfeasibleError
        If the rate floors can't be met within the energy budget.
    hybris.errors.SolverFailedError
        If every configured solver failed.
    """
    options = options or config_.SolverOptions()
    budget = transmit_budget(config, delivery_time)
    thresholds = rate_thresholds(config, delivery_time)
    if not np.all(np.isfinite(thresholds)):
        raise errors.SubproblemInfeasibleError("a rate floor can't be met in the time left")

    rows = _normalised_rows(model.effective_channels(channels, phases), config.noise_powers)
    users, antennas = rows.shape

    matrices = [cp.Variable((antennas, antennas), hermitian=True) for _ in range(users)]
    couplings = [np.outer(row.conj(), row) for row in rows]
    gains = [[cp.real(cp.trace(couplings[k] @ matrices[i])) for i in range(users)] for k in range(users)]
    total_power = cp.sum(cp.hstack([cp.real(cp.trace(matrix)) for matrix in matrices]))
    constraints: typing.List[cp.Constraint] = [matrix >> 0 for matrix in matrices]
    constraints.append(total_power <= budget)
    for k in range(users):
        interference = cp.sum(cp.hstack([gains[k][i] for i in range(users) if i != k])) if users > 1 else 0.0
        # A floor of zero still asks for some signal so the start isn't all zeros.
        constraints.append(gains[k][k] >= max(float(thresholds[k]), 1e-3) * (interference + 1.0))

    outcome = _solve(cp.Problem(cp.Minimize(total_power), constraints), options, "minimum-power")
    solved = np.array([_hermitian_part(outcome[matrix]) for matrix in matrices])
    return model.BeamformerSet(
        np.array([_principal(matrix, np.ones(antennas, dtype=np.complex128)) for matrix in solved])
    )
