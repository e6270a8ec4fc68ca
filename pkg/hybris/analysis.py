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
"""Closed-form analysis of the single-user, fixed-power special case.

With one user, a fixed transmit power `p_t` and every coherent element
contributing at least `√C`, the throughput is bounded below by
`(T − t)·log₂(1 + p̄·C·N²)` where `N` is the coherent element count. This
module evaluates the optimal delivery time, the element count maximising
that bound in both delivery-time regimes, their feasibility conditions and
brute-force oracles for all of them.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "BruteForceResult",
    "Case1Feasibility",
    "Case2Feasibility",
    "SimpleScenario",
    "TimeRule",
    "analyze_scenario",
    "brute_force_n",
    "feasible_case1",
    "feasible_case2",
    "integer_pair",
    "lambert_w0",
    "n_star_case1",
    "n_star_case2",
    "objective",
    "optimal_snr",
    "snr_lower_bound",
    "t_star",
]

import dataclasses
import logging
import math
import typing

import numpy as np
from scipy import optimize

from . import errors

if typing.TYPE_CHECKING:
    import numpy.typing as npt

_LOGGER = logging.getLogger(__name__)

TimeRule = typing.Literal["case-1", "case-2"]
"""How the delivery time follows the element count: the delivery bound alone or the max with the energy bound."""

_BRANCH_POINT = -math.exp(-1.0)
_HALLEY_TOLERANCE = 1e-12
_HALLEY_MAX_ITERATIONS = 50
LARGE_SNR_GATE: typing.Final[float] = 1e4
"""Smallest `p̄·C` the large-SNR element count is offered for."""


@dataclasses.dataclass(frozen=True)
class SimpleScenario:
    """Single-user fixed-power scenario.

    Attributes
    ----------
    transmit_power : builtins.float
        Fixed BS transmit power `p_t` in watts.
    delivery_power : builtins.float
        Power `p` spent while delivering the coherent phases, in watts.
    frame_time : builtins.float
    energy_budget : builtins.float
    bits : builtins.int
    delivery_rate : builtins.float
    min_rate : builtins.float
        Throughput floor in bits.
    channel_constant : builtins.float
        `C`, the smallest per-element `|h_r,n|²·|h_n|²` product.
    snr_scale : builtins.float
        `p̄ = p_t/δ²`.
    """

    transmit_power: float
    delivery_power: float
    frame_time: float
    energy_budget: float
    bits: int
    delivery_rate: float
    min_rate: float
    channel_constant: float
    snr_scale: float

    def __post_init__(self) -> None:
        if not self.transmit_power > self.delivery_power:
            raise errors.ConfigurationError("the transmit power must exceed the delivery power")

        if not self.delivery_power >= 0:
            raise errors.ConfigurationError("the delivery power can't be negative")

        for name in ("frame_time", "delivery_rate", "channel_constant", "snr_scale"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise errors.ConfigurationError(f"{name} must be finite and positive")

        if self.bits < 1:
            raise errors.ConfigurationError("bits must be at least 1")

        if not self.min_rate >= 0 or not self.energy_budget >= 0:
            raise errors.ConfigurationError("min_rate and energy_budget can't be negative")

    @classmethod
    def from_magnitudes(
        cls,
        ris_user_magnitudes: npt.ArrayLike,
        bs_ris_magnitudes: npt.ArrayLike,
        noise_power: float,
        /,
        *,
        transmit_power: float,
        **fields: typing.Any,
    ) -> SimpleScenario:
        """Build a scenario with `C` and `p̄` taken from per-element channel magnitudes.

        Parameters
        ----------
        ris_user_magnitudes : numpy.typing.ArrayLike
            `|h_r,n|` of every coherent element.
        bs_ris_magnitudes : numpy.typing.ArrayLike
            `|h_n|` of every coherent element.
        noise_power : builtins.float
            `δ²` in watts.
        transmit_power : builtins.float
            `p_t` in watts.
        **fields : typing.Any
            Every other field of this class except `channel_constant` and `snr_scale`.

        Raises
        ------
        hybris.errors.ConfigurationError
            If the magnitude vectors are empty or of different lengths.
        """
        ris_user = np.abs(np.asarray(ris_user_magnitudes, dtype=np.float64)).reshape(-1)
        bs_ris = np.abs(np.asarray(bs_ris_magnitudes, dtype=np.float64)).reshape(-1)
        if ris_user.size == 0 or ris_user.shape != bs_ris.shape:
            raise errors.ConfigurationError("channel magnitudes must be non-empty and of equal length")

        if not noise_power > 0:
            raise errors.ConfigurationError("noise_power must be positive")

        channel_constant = float(np.min(ris_user**2 * bs_ris**2))
        return cls(
            transmit_power=transmit_power,
            channel_constant=channel_constant,
            snr_scale=transmit_power / noise_power,
            **fields,
        )

    @property
    def max_elements(self) -> float:
        """`T·R_F/b`, the element count whose delivery fills the frame."""
        return self.frame_time * self.delivery_rate / self.bits

    @property
    def energy_bound(self) -> float:
        """`(E_max − T·p_t)/(p − p_t)`, the delivery time the energy budget forces."""
        return (self.energy_budget - self.frame_time * self.transmit_power) / (
            self.delivery_power - self.transmit_power
        )

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return dataclasses.asdict(self)


def lambert_w0(x: float, /) -> float:
    """Evaluate the principal branch of the Lambert W function.

    Halley iteration from a branch-point series near `−1/e`, a power series
    near 0 and the asymptotic `ln x − ln ln x` above `e`.

    Raises
    ------
    hybris.errors.DomainError
        If `x < −1/e` or `x` is NaN.
    """
    if math.isnan(x) or x < _BRANCH_POINT:
        raise errors.DomainError(f"the principal Lambert W branch isn't real at {x}")

    if x == _BRANCH_POINT:
        return -1.0

    if x == 0 or math.isinf(x):
        return float(x)

    if x > math.e:
        log_x = math.log(x)
        w = log_x - math.log(log_x)

    elif x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p**2 / 3.0 + 11.0 * p**3 / 72.0

    elif abs(x) < 0.25:
        w = x - x**2 + 1.5 * x**3

    else:
        w = math.log1p(x)

    for _ in range(_HALLEY_MAX_ITERATIONS):
        exp_w = math.exp(w)
        residual = w * exp_w - x
        shifted = w + 1.0
        if shifted == 0:
            break

        dw = residual / (exp_w * shifted - (w + 2.0) * residual / (2.0 * shifted))
        w -= dw
        if abs(dw) <= _HALLEY_TOLERANCE * (1.0 + abs(w)):
            break

    return max(w, -1.0)


def _check_elements(n_coherent: float, /) -> None:
    if not n_coherent >= 0:
        raise errors.DomainError(f"element count must be non-negative, not {n_coherent}")


def t_star(scenario: SimpleScenario, n_coherent: float, /) -> float:
    """Optimal delivery time `max(b·N/R_F, (E_max − T·p_t)/(p − p_t))`, never below 0.

    Raises
    ------
    hybris.errors.DomainError
        If `n_coherent` is negative.
    hybris.errors.ScenarioInfeasibleError
        If the result leaves no transmission time.
    """
    _check_elements(n_coherent)
    result = max(scenario.bits * n_coherent / scenario.delivery_rate, scenario.energy_bound, 0.0)
    if result >= scenario.frame_time:
        raise errors.ScenarioInfeasibleError(
            f"the optimal delivery time {result:.6g} s leaves nothing of the {scenario.frame_time} s frame"
        )

    return result


def snr_lower_bound(scenario: SimpleScenario, n_coherent: float, /) -> float:
    """`p̄·C·N²`, a lower bound on the SNR with every coherent element phase aligned."""
    _check_elements(n_coherent)
    return scenario.snr_scale * scenario.channel_constant * n_coherent**2


def optimal_snr(ris_user_magnitudes: npt.ArrayLike, bs_ris_magnitudes: npt.ArrayLike, snr_scale: float, /) -> float:
    """SNR with every coherent element phase aligned, `p̄·(Σ_n |h_r,n|·|h_n|)²`."""
    ris_user = np.abs(np.asarray(ris_user_magnitudes, dtype=np.float64))
    bs_ris = np.abs(np.asarray(bs_ris_magnitudes, dtype=np.float64))
    return snr_scale * float(np.sum(ris_user * bs_ris)) ** 2


def n_star_case1(scenario: SimpleScenario, /, *, enforce_regime: bool = True) -> float:
    """Element count maximising the large-SNR bound when the delivery time is `b·N/R_F`.

    `N* = T·R_F / (b·W₀(e·T·R_F·√(p̄C)/b))`, the root of
    `T·R_F/N = b + b·ln(√(p̄C)·N)`.

    Other Parameters
    ----------------
    enforce_regime : builtins.bool
        Whether to refuse scenarios with `p̄·C` below `LARGE_SNR_GATE`.

    Raises
    ------
    hybris.errors.CaseInapplicableError
        If `enforce_regime` is set and `p̄·C < LARGE_SNR_GATE`.
    """
    snr_constant = scenario.snr_scale * scenario.channel_constant
    if enforce_regime and snr_constant < LARGE_SNR_GATE:
        raise errors.CaseInapplicableError(
            f"p̄·C = {snr_constant:.4g} is below the large-SNR regime ({LARGE_SNR_GATE:.0e})"
        )

    span = scenario.frame_time * scenario.delivery_rate
    argument = math.e * span * math.sqrt(snr_constant) / scenario.bits
    return span / (scenario.bits * lambert_w0(argument))


def n_star_case2(scenario: SimpleScenario, /) -> float:
    """Element count maximising the bound when the energy budget sets the delivery time.

    The bound increases with `N` until the delivery bound catches up with
    the energy bound, so the optimum is `(E_max − T·p_t)·R_F/((p − p_t)·b)`.

    Raises
    ------
    hybris.errors.CaseInapplicableError
        Unless `E_max < T·p_t` and `T·p < E_max`.
    """
    if not scenario.energy_budget < scenario.frame_time * scenario.transmit_power:
        raise errors.CaseInapplicableError("the energy budget covers full-power transmission over the whole frame")

    if not scenario.frame_time * scenario.delivery_power < scenario.energy_budget:
        raise errors.CaseInapplicableError("the energy budget doesn't cover delivery power over the whole frame")

    return scenario.energy_bound * scenario.delivery_rate / scenario.bits


@dataclasses.dataclass(frozen=True)
class Case1Feasibility:
    """Feasibility of the delivery-bound optimum.

    Attributes
    ----------
    energy_residual : builtins.float
        `N* − (E_max − T·p_t)·R_F/((p − p_t)·b)`; the delivery bound is
        binding when this is positive.
    rate_residual : typing.Optional[builtins.float]
        `2(T·R_F − b·N*)/(R_F·ln 2) − R_min/ln(√(p̄C)·N*)`, or
        `builtins.None` when `√(p̄C)·N* ≤ 1` leaves it undefined.
    """

    energy_residual: float
    rate_residual: typing.Optional[float]

    @property
    def defined(self) -> bool:
        return self.rate_residual is not None

    @property
    def feasible(self) -> bool:
        return self.energy_residual > 0 and self.rate_residual is not None and self.rate_residual >= 0

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {
            "energy_residual": self.energy_residual,
            "rate_residual": self.rate_residual,
            "defined": self.defined,
            "feasible": self.feasible,
        }


@dataclasses.dataclass(frozen=True)
class Case2Feasibility:
    """Feasibility of the energy-bound optimum.

    Attributes
    ----------
    residual : builtins.float
        `N* − bound`.
    bound : builtins.float
        `√(2^{R_min(p − p_t)/(T·p − E_max)}/(p̄C))`.
    """

    residual: float
    bound: float

    @property
    def feasible(self) -> bool:
        return self.residual >= 0

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {"residual": self.residual, "bound": self.bound, "feasible": self.feasible}


def feasible_case1(scenario: SimpleScenario, n_star: float, /) -> Case1Feasibility:
    """Check the delivery-bound optimum against the energy budget and the rate floor."""
    s = scenario
    energy_residual = n_star - s.energy_bound * s.delivery_rate / s.bits
    aligned = math.sqrt(s.snr_scale * s.channel_constant) * n_star
    if aligned <= 1:
        _LOGGER.debug("Rate condition is undefined as √(p̄C)·N* = %.4g is at most 1", aligned)
        return Case1Feasibility(energy_residual, None)

    span = s.frame_time * s.delivery_rate
    rate_residual = 2.0 * (span - s.bits * n_star) / (s.delivery_rate * math.log(2.0))
    rate_residual -= s.min_rate / math.log(aligned)
    return Case1Feasibility(energy_residual, rate_residual)


def feasible_case2(scenario: SimpleScenario, n_star: float, /) -> Case2Feasibility:
    """Check the energy-bound optimum against the rate floor.

    Raises
    ------
    hybris.errors.DomainError
        If `T·p == E_max`.
    """
    s = scenario
    denominator = s.frame_time * s.delivery_power - s.energy_budget
    if denominator == 0:
        raise errors.DomainError("the rate condition is undefined when T·p equals the energy budget")

    exponent = s.min_rate * (s.delivery_power - s.transmit_power) / denominator
    try:
        bound = math.sqrt(2.0**exponent / (s.snr_scale * s.channel_constant))

    except OverflowError:
        bound = math.inf

    return Case2Feasibility(n_star - bound, bound)


def _delivery_time(scenario: SimpleScenario, n_coherent: float, rule: TimeRule, /) -> float:
    delivery = scenario.bits * n_coherent / scenario.delivery_rate
    if rule == "case-1":
        return delivery

    if rule == "case-2":
        return max(delivery, scenario.energy_bound)

    raise errors.ConfigurationError(f"unknown delivery-time rule {rule!r}")


def objective(scenario: SimpleScenario, n_coherent: float, rule: TimeRule, /, *, leading: bool = False) -> float:
    """Evaluate the throughput bound `(T − t(N))·log₂(1 + p̄·C·N²)`.

    Other Parameters
    ----------------
    leading : builtins.bool
        Drop the `1 +` inside the log, leaving the large-SNR leading term.
    """
    snr = scenario.snr_scale * scenario.channel_constant * n_coherent**2
    remaining = scenario.frame_time - _delivery_time(scenario, n_coherent, rule)
    if leading:
        return remaining * math.log2(snr) if snr > 0 else -math.inf

    return remaining * math.log2(1.0 + snr)


@dataclasses.dataclass(frozen=True)
class BruteForceResult:
    """Argmaxes of the throughput bound found by direct search.

    Attributes
    ----------
    rule : TimeRule
    exact_argmax : builtins.float
        Argmax of `(T − t(N))·log₂(1 + p̄·C·N²)`.
    exact_value : builtins.float
    leading_argmax : builtins.float
        Argmax with the `1 +` dropped.
    leading_value : builtins.float
    """

    rule: TimeRule
    exact_argmax: float
    exact_value: float
    leading_argmax: float
    leading_value: float

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return dataclasses.asdict(self)


def _maximise(
    function: typing.Callable[[float], float], lower: float, upper: float, /
) -> typing.Tuple[float, float]:
    found = optimize.minimize_scalar(
        lambda n: -function(n), bounds=(lower, upper), method="bounded", options={"xatol": 1e-10 * max(1.0, upper)}
    )
    candidates = [(float(found.x), function(float(found.x))), (lower, function(lower)), (upper, function(upper))]
    return max(candidates, key=lambda candidate: candidate[1])


def brute_force_n(
    scenario: SimpleScenario,
    rule: TimeRule,
    /,
    n_range: typing.Optional[typing.Tuple[float, float]] = None,
    *,
    integer: bool = False,
) -> BruteForceResult:
    """Maximise the throughput bound over an element count range.

    Parameters
    ----------
    scenario : SimpleScenario
    rule : TimeRule
    n_range : typing.Optional[typing.Tuple[builtins.float, builtins.float]]
        Closed search range inside `[0, T·R_F/b]`, defaults to all of it.

    Other Parameters
    ----------------
    integer : builtins.bool
        Search the integers of the range exhaustively instead of running a
        bounded scalar search.

    Raises
    ------
    hybris.errors.DomainError
        If the range is empty or leaves `[0, T·R_F/b]`.
    """
    lower, upper = n_range if n_range is not None else (0.0, scenario.max_elements)
    if not 0 <= lower < upper <= scenario.max_elements * (1.0 + 1e-12):
        raise errors.DomainError(f"element count range ({lower}, {upper}) is empty or outside the frame")

    def exact(n: float) -> float:
        return objective(scenario, n, rule)

    def leading(n: float) -> float:
        return objective(scenario, n, rule, leading=True)

    if integer:
        counts = range(math.ceil(lower), math.floor(upper) + 1)
        if not counts:
            raise errors.DomainError(f"element count range ({lower}, {upper}) holds no integer")

        exact_argmax = max(counts, key=exact)
        leading_argmax = max(counts, key=leading)
        return BruteForceResult(
            rule, float(exact_argmax), exact(exact_argmax), float(leading_argmax), leading(leading_argmax)
        )

    exact_argmax, exact_value = _maximise(exact, lower, upper)
    leading_argmax, leading_value = _maximise(leading, lower, upper)
    return BruteForceResult(rule, exact_argmax, exact_value, leading_argmax, leading_value)


def integer_pair(scenario: SimpleScenario, n_star: float, rule: TimeRule, /) -> typing.Dict[str, typing.Any]:
    """Report `⌊N*⌋`, `⌈N*⌉` and whichever of them scores higher under the exact bound."""
    floor, ceiling = math.floor(n_star), math.ceil(n_star)
    scores = {count: objective(scenario, count, rule) for count in (floor, ceiling)}
    best = max(scores, key=scores.__getitem__)
    return {"floor": floor, "ceil": ceiling, "best": best, "best_value": scores[best]}


def _relative_gap(value: float, reference: float, /) -> float:
    return abs(value - reference) / max(abs(reference), 1e-12)


def analyze_scenario(
    scenario: SimpleScenario,
    /,
    *,
    n_coherent: typing.Optional[float] = None,
    magnitudes: typing.Optional[typing.Tuple[npt.ArrayLike, npt.ArrayLike]] = None,
) -> typing.Dict[str, typing.Any]:
    """Build the closed-form report of a scenario.

    Parameters
    ----------
    scenario : SimpleScenario

    Other Parameters
    ----------------
    n_coherent : typing.Optional[builtins.float]
        Element count to evaluate the optimal delivery time and SNR bound at.
    magnitudes : typing.Optional[typing.Tuple[numpy.typing.ArrayLike, numpy.typing.ArrayLike]]
        `(|h_r|, |h|)` of the coherent elements, used to compare the SNR
        bound with the phase-aligned SNR.

    Returns
    -------
    typing.Dict[builtins.str, typing.Any]
        JSON serialisable report; cases whose preconditions fail carry
        `"applicable": false` and the reason.
    """
    report: typing.Dict[str, typing.Any] = {"scenario": scenario.to_dict()}
    if n_coherent is not None:
        point: typing.Dict[str, typing.Any] = {"n_coherent": n_coherent}
        try:
            point["t_star"] = t_star(scenario, n_coherent)
            delivery = scenario.bits * n_coherent / scenario.delivery_rate
            point["binding"] = "energy" if scenario.energy_bound > delivery else "delivery"

        except errors.ScenarioInfeasibleError as exc:
            point["t_star"] = None
            point["infeasible"] = str(exc)

        point["snr_lower_bound"] = snr_lower_bound(scenario, n_coherent)
        if magnitudes is not None:
            point["optimal_snr"] = optimal_snr(magnitudes[0], magnitudes[1], scenario.snr_scale)

        report["operating_point"] = point

    case1: typing.Dict[str, typing.Any] = {"applicable": True}
    try:
        n_star = n_star_case1(scenario)

    except errors.CaseInapplicableError as exc:
        case1 = {"applicable": False, "reason": str(exc)}

    else:
        oracle = brute_force_n(scenario, "case-1")
        case1.update(
            n_star=n_star,
            integer=integer_pair(scenario, n_star, "case-1"),
            feasibility=feasible_case1(scenario, n_star).to_dict(),
            oracle=oracle.to_dict(),
            leading_divergence=_relative_gap(oracle.leading_argmax, n_star),
            exact_divergence=_relative_gap(oracle.exact_argmax, n_star),
        )

    report["case_1"] = case1

    case2: typing.Dict[str, typing.Any] = {"applicable": True}
    try:
        n_star = n_star_case2(scenario)
        feasibility = feasible_case2(scenario, n_star)

    except (errors.CaseInapplicableError, errors.DomainError) as exc:
        case2 = {"applicable": False, "reason": str(exc)}

    else:
        case2.update(n_star=n_star, integer=integer_pair(scenario, n_star, "case-2"), feasibility=feasibility.to_dict())
        if 0 < n_star <= scenario.max_elements:
            oracle = brute_force_n(scenario, "case-2", (0.0, n_star))
            case2.update(oracle=oracle.to_dict(), exact_divergence=_relative_gap(oracle.exact_argmax, n_star))

    report["case_2"] = case2
    return report
