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
"""System model of the hybrid coherent/fixed phase RIS downlink.

Effective channels, SINR, throughput, energy accounting and the residual
report for the throughput maximisation problem's constraints all live here.
Bandwidth is normalised to 1 Hz so a rate in bits/s/Hz multiplied by a time in
seconds is a bit count, and every power is held in watts.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "BeamformerSet",
    "ChannelRealization",
    "FeasibilityReport",
    "HybridPhaseConfig",
    "Solution",
    "SystemConfig",
    "check_feasibility",
    "effective_channel",
    "effective_channels",
    "energy_used",
    "sinr",
    "throughput",
]

import dataclasses
import math
import typing

import numpy as np
import numpy.typing as npt

from . import errors

if typing.TYPE_CHECKING:
    _ComplexArray = npt.NDArray[np.complex128]
    _FloatArray = npt.NDArray[np.float64]

_TWO_PI = 2.0 * math.pi
DEFAULT_FEASIBILITY_TOLERANCE: typing.Final[float] = 1e-6


def _readonly(value: npt.ArrayLike, dtype: typing.Any, /) -> typing.Any:
    array = np.array(value, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _as_user_tuple(
    value: typing.Union[float, typing.Iterable[float]], users: int, name: str, /
) -> typing.Tuple[float, ...]:
    if isinstance(value, (int, float, np.floating, np.integer)):
        return (float(value),) * users

    result = tuple(float(entry) for entry in value)
    if len(result) != users:
        raise errors.ConfigurationError(f"{name} has {len(result)} entries but there are {users} users")

    return result


@dataclasses.dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of the hybrid phase delivery problem.

    Attributes
    ----------
    antennas : builtins.int
        BS antenna count (`M`).
    users : builtins.int
        Single antenna user count (`K`).
    n_coherent : builtins.int
        Elements whose optimised phase has to be delivered (`N_coh`).
    n_fixed : builtins.int
        Elements left at a random, never delivered phase (`N_fix`).
    bits : builtins.int
        Quantisation bits per delivered coherent phase (`b`).
    delivery_rate : builtins.float
        Control link delivery rate in bits/second (`R_F`).
    frame_time : builtins.float
        Frame duration in seconds (`T`).
    delivery_power : builtins.float
        BS power spent while delivering phases, in watts (`p`).
    energy_budget : builtins.float
        BS energy budget per frame, in joules (`E_max`).
    min_rates : typing.Tuple[builtins.float, ...]
        Per-user minimum throughput in bits (`R_min`). A scalar is broadcast
        to every user.
    noise_powers : typing.Tuple[builtins.float, ...]
        Per-user noise power in watts (`δ²`). A scalar is broadcast to every
        user.

    !!! note
        This doesn't reject configurations where the delivery alone fills the
        frame (`b·N_coh/R_F ≥ T`); those surface as an
        `hybris.errors.InitializationInfeasibleError` when solving.
    """

    antennas: int
    users: int
    n_coherent: int
    n_fixed: int
    bits: int
    delivery_rate: float
    frame_time: float
    delivery_power: float
    energy_budget: float
    min_rates: typing.Tuple[float, ...]
    noise_powers: typing.Tuple[float, ...]

    def __post_init__(self) -> None:
        for name, minimum in (("antennas", 1), ("users", 1), ("bits", 1), ("n_coherent", 0), ("n_fixed", 0)):
            value = getattr(self, name)
            if int(value) != value or value < minimum:
                raise errors.ConfigurationError(f"{name} must be an integer greater than or equal to {minimum}")

            object.__setattr__(self, name, int(value))

        if self.n_coherent + self.n_fixed < 1:
            raise errors.ConfigurationError("the RIS needs at least one element")

        for name in ("delivery_rate", "frame_time", "delivery_power", "energy_budget"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0:
                raise errors.ConfigurationError(f"{name} must be a finite positive number")

        min_rates = _as_user_tuple(self.min_rates, self.users, "min_rates")
        noise_powers = _as_user_tuple(self.noise_powers, self.users, "noise_powers")
        if any(not math.isfinite(rate) or rate < 0 for rate in min_rates):
            raise errors.ConfigurationError("min_rates must be finite and non-negative")

        if any(not math.isfinite(power) or power <= 0 for power in noise_powers):
            raise errors.ConfigurationError("noise_powers must be finite and positive")

        object.__setattr__(self, "min_rates", min_rates)
        object.__setattr__(self, "noise_powers", noise_powers)

    @property
    def n_elements(self) -> int:
        """Total RIS element count (`N`)."""
        return self.n_coherent + self.n_fixed

    @property
    def min_delivery_time(self) -> float:
        """Shortest delivery time allowed by the delivery-bit budget, `b·N_coh/R_F`."""
        return self.bits * self.n_coherent / self.delivery_rate

    @property
    def has_transmission_window(self) -> bool:
        """Whether any transmission time remains after the minimum delivery time."""
        return self.min_delivery_time < self.frame_time

    def replace(self, **changes: typing.Any) -> SystemConfig:
        """Return a copy of this config with some fields replaced.

        Per-user fields which are uniform are re-broadcast when `users`
        changes without new per-user values being given.
        """
        users = int(changes.get("users", self.users))
        if users != self.users:
            for name in ("min_rates", "noise_powers"):
                current = getattr(self, name)
                if name not in changes and len(set(current)) == 1:
                    changes[name] = current[0]

        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True)
class ChannelRealization:
    """One draw of the RIS channels, split into the coherent and fixed sub-surfaces.

    Attributes
    ----------
    bs_ris_coherent : numpy.ndarray
        `N_coh × M` BS→RIS channel of the coherent elements.
    bs_ris_fixed : numpy.ndarray
        `N_fix × M` BS→RIS channel of the fixed elements.
    ris_user_coherent : numpy.ndarray
        `K × N_coh` RIS→user channels of the coherent elements, one row per user.
    ris_user_fixed : numpy.ndarray
        `K × N_fix` RIS→user channels of the fixed elements, one row per user.
    """

    bs_ris_coherent: _ComplexArray
    bs_ris_fixed: _ComplexArray
    ris_user_coherent: _ComplexArray
    ris_user_fixed: _ComplexArray

    def __post_init__(self) -> None:
        for field in dataclasses.fields(self):
            array = np.asarray(getattr(self, field.name))
            if array.ndim != 2:
                raise errors.ConfigurationError(f"{field.name} must be a 2D array")

            if not np.all(np.isfinite(array)):
                raise errors.ConfigurationError(f"{field.name} has non-finite entries")

            object.__setattr__(self, field.name, _readonly(array, np.complex128))

        if self.bs_ris_coherent.shape[1] != self.bs_ris_fixed.shape[1]:
            raise errors.ConfigurationError("coherent and fixed BS-RIS blocks disagree on the antenna count")

        if self.ris_user_coherent.shape[0] != self.ris_user_fixed.shape[0]:
            raise errors.ConfigurationError("coherent and fixed RIS-user blocks disagree on the user count")

        if self.ris_user_coherent.shape[1] != self.bs_ris_coherent.shape[0]:
            raise errors.ConfigurationError("coherent blocks disagree on the element count")

        if self.ris_user_fixed.shape[1] != self.bs_ris_fixed.shape[0]:
            raise errors.ConfigurationError("fixed blocks disagree on the element count")

    @classmethod
    def from_stacked(cls, bs_ris: npt.ArrayLike, ris_user: npt.ArrayLike, n_coherent: int, /) -> ChannelRealization:
        """Split full-surface channels into their coherent and fixed parts.

        The first `n_coherent` elements form the coherent sub-surface.

        Parameters
        ----------
        bs_ris : numpy.typing.ArrayLike
            `N × M` BS→RIS channel.
        ris_user : numpy.typing.ArrayLike
            `K × N` RIS→user channels.
        n_coherent : builtins.int
            How many of the leading elements are coherent.

        Raises
        ------
        hybris.errors.ConfigurationError
            If `n_coherent` doesn't fit the surface or the shapes disagree.
        """
        bs_ris = np.asarray(bs_ris, dtype=np.complex128)
        ris_user = np.asarray(ris_user, dtype=np.complex128)
        if bs_ris.ndim != 2 or ris_user.ndim != 2 or bs_ris.shape[0] != ris_user.shape[1]:
            raise errors.ConfigurationError("stacked channels disagree on the element count")

        if not 0 <= n_coherent <= bs_ris.shape[0]:
            raise errors.ConfigurationError(f"cannot take {n_coherent} coherent elements from {bs_ris.shape[0]}")

        return cls(
            bs_ris_coherent=bs_ris[:n_coherent],
            bs_ris_fixed=bs_ris[n_coherent:],
            ris_user_coherent=ris_user[:, :n_coherent],
            ris_user_fixed=ris_user[:, n_coherent:],
        )

    @property
    def antennas(self) -> int:
        return int(self.bs_ris_coherent.shape[1])

    @property
    def users(self) -> int:
        return int(self.ris_user_coherent.shape[0])

    @property
    def n_coherent(self) -> int:
        return int(self.bs_ris_coherent.shape[0])

    @property
    def n_fixed(self) -> int:
        return int(self.bs_ris_fixed.shape[0])

    def stacked(self) -> typing.Tuple[_ComplexArray, _ComplexArray]:
        """Return the full `N × M` BS→RIS and `K × N` RIS→user channels."""
        return (
            np.vstack((self.bs_ris_coherent, self.bs_ris_fixed)),
            np.hstack((self.ris_user_coherent, self.ris_user_fixed)),
        )

    def repartition(self, n_coherent: int, /) -> ChannelRealization:
        """Return the same draw with a different coherent/fixed split."""
        return ChannelRealization.from_stacked(*self.stacked(), n_coherent)

    def validate_against(self, config: SystemConfig, /) -> None:
        """Check this realization's dimensions match a config.

        Raises
        ------
        hybris.errors.ConfigurationError
            On any dimension mismatch.
        """
        expected = (config.antennas, config.users, config.n_coherent, config.n_fixed)
        found = (self.antennas, self.users, self.n_coherent, self.n_fixed)
        if expected != found:
            raise errors.ConfigurationError(
                f"channel dimensions (M, K, N_coh, N_fix)={found} don't match the config's {expected}"
            )


@dataclasses.dataclass(frozen=True)
class HybridPhaseConfig:
    """Phase shifts of the coherent and fixed sub-surfaces, in radians.

    Both vectors are wrapped into `[0, 2π)` on construction.
    """

    theta_coherent: _FloatArray
    theta_fixed: _FloatArray

    def __post_init__(self) -> None:
        for name in ("theta_coherent", "theta_fixed"):
            array = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(array)):
                raise errors.ConfigurationError(f"{name} has non-finite entries")

            wrapped = np.mod(array, _TWO_PI)
            # np.mod can round tiny negative angles up to exactly 2π.
            wrapped[wrapped >= _TWO_PI] = 0.0
            object.__setattr__(self, name, _readonly(wrapped, np.float64))

    @classmethod
    def random(cls, n_coherent: int, n_fixed: int, rng: np.random.Generator, /) -> HybridPhaseConfig:
        """Draw both sub-surfaces' phases uniformly from `[0, 2π)`."""
        return cls(rng.uniform(0.0, _TWO_PI, n_coherent), rng.uniform(0.0, _TWO_PI, n_fixed))

    @property
    def coherent_phasors(self) -> _ComplexArray:
        """`e^{jθ}` for the coherent elements."""
        return np.exp(1j * self.theta_coherent)

    @property
    def fixed_phasors(self) -> _ComplexArray:
        """`e^{jθ}` for the fixed elements."""
        return np.exp(1j * self.theta_fixed)

    def with_coherent(self, theta_coherent: npt.ArrayLike, /) -> HybridPhaseConfig:
        """Return a copy with new coherent phases and the same frozen fixed phases."""
        return HybridPhaseConfig(np.asarray(theta_coherent, dtype=np.float64), self.theta_fixed)


@dataclasses.dataclass(frozen=True)
class BeamformerSet:
    """Per-user transmit beamforming vectors, stored as the rows of a `K × M` array."""

    vectors: _ComplexArray

    def __post_init__(self) -> None:
        array = np.asarray(self.vectors, dtype=np.complex128)
        if array.ndim != 2:
            raise errors.ConfigurationError("beamformers must be a K x M array")

        if not np.all(np.isfinite(array)):
            raise errors.ConfigurationError("beamformers have non-finite entries")

        object.__setattr__(self, "vectors", _readonly(array, np.complex128))

    @property
    def users(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def antennas(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def total_power(self) -> float:
        """`Σ_k ‖w_k‖²` in watts."""
        return float(np.sum(np.abs(self.vectors) ** 2))

    def scaled_to(self, total_power: float, /) -> BeamformerSet:
        """Return these beams with every vector scaled by one common factor to `total_power`.

        Raises
        ------
        hybris.errors.DomainError
            If `total_power` is negative or every beam is zero.
        """
        current = self.total_power
        if total_power < 0 or not current > 0:
            raise errors.DomainError("can only rescale non-zero beams to a non-negative power")

        return BeamformerSet(self.vectors * math.sqrt(total_power / current))


@dataclasses.dataclass(frozen=True)
class Solution:
    """A point of the throughput maximisation problem together with its rates.

    Attributes
    ----------
    phases : HybridPhaseConfig
    beams : BeamformerSet
    delivery_time : builtins.float
        Seconds spent delivering the coherent phases (`t`).
    per_user_rate : numpy.ndarray
        Throughput of each user in bits.
    """

    phases: HybridPhaseConfig
    beams: BeamformerSet
    delivery_time: float
    per_user_rate: _FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "delivery_time", float(self.delivery_time))
        object.__setattr__(self, "per_user_rate", _readonly(np.asarray(self.per_user_rate).reshape(-1), np.float64))

    @property
    def objective(self) -> float:
        """Sum throughput in bits."""
        return float(np.sum(self.per_user_rate))


@dataclasses.dataclass(frozen=True)
class FeasibilityReport:
    """Signed constraint slacks of a `Solution`; negative means violated.

    Attributes
    ----------
    energy_slack : builtins.float
        `E_max − (p·t + (T−t)Σ‖w_k‖²)` in joules.
    rate_slacks : numpy.ndarray
        `R_k − R_min_k` in bits, per user.
    unit_modulus_deviation : builtins.float
        Largest `| |e^{jθ}| − 1 |` over every element.
    delivery_slack : builtins.float
        `t·R_F − b·N_coh` in bits.
    time_in_range : builtins.bool
        Whether `0 ≤ t ≤ T`.
    tolerance : builtins.float
        Relative tolerance the flag was computed with.
    feasible : builtins.bool
        Whether every slack is within tolerance.
    """

    energy_slack: float
    rate_slacks: _FloatArray
    unit_modulus_deviation: float
    delivery_slack: float
    time_in_range: bool
    tolerance: float
    feasible: bool

    @property
    def min_rate_slack(self) -> float:
        return float(np.min(self.rate_slacks)) if self.rate_slacks.size else math.inf

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {
            "energy_slack": self.energy_slack,
            "rate_slacks": [float(value) for value in self.rate_slacks],
            "unit_modulus_deviation": self.unit_modulus_deviation,
            "delivery_slack": self.delivery_slack,
            "time_in_range": self.time_in_range,
            "tolerance": self.tolerance,
            "feasible": self.feasible,
        }


def effective_channels(channels: ChannelRealization, phases: HybridPhaseConfig, /) -> _ComplexArray:
    """Compute every user's effective BS→user channel.

    Row `k` of the result is
    `h_kᴴ = (h_{r,k}^coh)ᴴ Θ^coh H^coh + (h_{r,k}^fix)ᴴ Θ^fix H^fix`.

    Parameters
    ----------
    channels : ChannelRealization
        The channel draw.
    phases : HybridPhaseConfig
        Phases of both sub-surfaces.

    Returns
    -------
    numpy.ndarray
        `K × M` complex array of effective channel rows.

    Raises
    ------
    hybris.errors.ConfigurationError
        If the phase vectors don't match the channel's sub-surface sizes.
    """
    if phases.theta_coherent.size != channels.n_coherent or phases.theta_fixed.size != channels.n_fixed:
        raise errors.ConfigurationError(
            f"phase vectors of length ({phases.theta_coherent.size}, {phases.theta_fixed.size}) don't match "
            f"the surface split ({channels.n_coherent}, {channels.n_fixed})"
        )

    coherent = (np.conj(channels.ris_user_coherent) * phases.coherent_phasors) @ channels.bs_ris_coherent
    fixed = (np.conj(channels.ris_user_fixed) * phases.fixed_phasors) @ channels.bs_ris_fixed
    return coherent + fixed


def effective_channel(channels: ChannelRealization, phases: HybridPhaseConfig, user: int, /) -> _ComplexArray:
    """Compute one user's effective channel row, see `effective_channels`.

    Raises
    ------
    hybris.errors.ConfigurationError
        On a dimension mismatch or if `user` is out of range.
    """
    if not 0 <= user < channels.users:
        raise errors.ConfigurationError(f"user index {user} out of range for {channels.users} users")

    return effective_channels(channels, phases)[user]


def _beam_array(beams: typing.Union[BeamformerSet, npt.ArrayLike], /) -> _ComplexArray:
    if isinstance(beams, BeamformerSet):
        return beams.vectors

    return np.atleast_2d(np.asarray(beams, dtype=np.complex128))


def sinr(
    channels: npt.ArrayLike,
    beams: typing.Union[BeamformerSet, npt.ArrayLike],
    noise_powers: typing.Union[float, typing.Sequence[float], npt.ArrayLike],
    /,
) -> _FloatArray:
    """Compute each user's SINR.

    `γ_k = |h_kᴴ w_k|² / (Σ_{i≠k} |h_kᴴ w_i|² + δ_k²)`

    Parameters
    ----------
    channels : numpy.typing.ArrayLike
        `K × M` effective channel rows.
    beams : typing.Union[BeamformerSet, numpy.typing.ArrayLike]
        `K × M` beamforming vectors, one row per user.
    noise_powers : typing.Union[builtins.float, numpy.typing.ArrayLike]
        Per-user noise power in watts (broadcast if scalar).

    Returns
    -------
    numpy.ndarray
        Non-negative SINR per user.

    Raises
    ------
    hybris.errors.ConfigurationError
        If a noise power isn't positive or the shapes disagree.
    """
    rows = np.atleast_2d(np.asarray(channels, dtype=np.complex128))
    vectors = _beam_array(beams)
    if rows.shape != vectors.shape:
        raise errors.ConfigurationError(f"channel shape {rows.shape} doesn't match beamformer shape {vectors.shape}")

    noise = np.broadcast_to(np.asarray(noise_powers, dtype=np.float64), (rows.shape[0],))
    if np.any(noise <= 0):
        raise errors.ConfigurationError("noise powers must be positive")

    gains = np.abs(rows @ vectors.T) ** 2
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (np.maximum(interference, 0.0) + noise)


def _check_time(delivery_time: float, frame_time: float, /) -> None:
    if not 0.0 <= delivery_time <= frame_time:
        raise errors.DomainError(f"delivery time {delivery_time} is outside [0, {frame_time}]")


def throughput(gammas: npt.ArrayLike, frame_time: float, delivery_time: float, /) -> _FloatArray:
    """Per-user throughput in bits, `R_k = (T − t)·log₂(1 + γ_k)`.

    Raises
    ------
    hybris.errors.DomainError
        If `delivery_time` is outside `[0, frame_time]`.
    """
    _check_time(delivery_time, frame_time)
    return (frame_time - delivery_time) * np.log2(1.0 + np.asarray(gammas, dtype=np.float64))


def energy_used(
    delivery_time: float,
    delivery_power: float,
    beams: typing.Union[BeamformerSet, npt.ArrayLike],
    frame_time: float,
    /,
) -> float:
    """BS energy over one frame in joules, `p·t + (T − t)·Σ_k ‖w_k‖²`.

    Raises
    ------
    hybris.errors.DomainError
        If `delivery_time` is outside `[0, frame_time]`.
    """
    _check_time(delivery_time, frame_time)
    total_power = float(np.sum(np.abs(_beam_array(beams)) ** 2))
    return delivery_power * delivery_time + (frame_time - delivery_time) * total_power


def check_feasibility(
    solution: Solution,
    config: SystemConfig,
    channels: ChannelRealization,
    /,
    *,
    tolerance: float = DEFAULT_FEASIBILITY_TOLERANCE,
) -> FeasibilityReport:
    """Report the signed slack of every constraint for a solution.

    Each slack is compared against `-tolerance` scaled by the magnitude of
    the constraint's right hand side (with a floor of 1).

    !!! note
        Infeasibility is reported through the returned flag, never raised.

    Raises
    ------
    hybris.errors.ConfigurationError
        If the solution or channels don't match the config's dimensions.
    """
    channels.validate_against(config)
    time_in_range = 0.0 <= solution.delivery_time <= config.frame_time
    clamped_time = min(max(solution.delivery_time, 0.0), config.frame_time)

    energy = config.delivery_power * solution.delivery_time
    energy += (config.frame_time - solution.delivery_time) * solution.beams.total_power
    energy_slack = config.energy_budget - energy

    gammas = sinr(effective_channels(channels, solution.phases), solution.beams, config.noise_powers)
    rates = throughput(gammas, config.frame_time, clamped_time)
    rate_slacks = rates - np.asarray(config.min_rates)

    phasors = np.concatenate((solution.phases.coherent_phasors, solution.phases.fixed_phasors))
    unit_modulus_deviation = float(np.max(np.abs(np.abs(phasors) - 1.0))) if phasors.size else 0.0
    delivery_slack = solution.delivery_time * config.delivery_rate - config.bits * config.n_coherent

    feasible = (
        time_in_range
        and energy_slack >= -tolerance * max(1.0, config.energy_budget)
        and bool(np.all(rate_slacks >= -tolerance * np.maximum(1.0, np.asarray(config.min_rates))))
        and unit_modulus_deviation <= 1e-9
        and delivery_slack >= -tolerance * max(1.0, config.bits * config.n_coherent)
    )
    return FeasibilityReport(
        energy_slack=float(energy_slack),
        rate_slacks=_readonly(rate_slacks, np.float64),
        unit_modulus_deviation=unit_modulus_deviation,
        delivery_slack=float(delivery_slack),
        time_in_range=time_in_range,
        tolerance=tolerance,
        feasible=bool(feasible),
    )
