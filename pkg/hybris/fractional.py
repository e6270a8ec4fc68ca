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
"""Quadratic-transform reformulation of the sum-throughput objective.

The surrogate is

    R_sum = (T − t)/ln 2 · (Σ ln(1 + ρ_k) − Σ ρ_k + Σ f_k)
    f_k   = 2η_k √((1 + ρ_k)|h_kᴴ w_k|²) − η_k² (Σ_i |h_kᴴ w_i|² + δ_k²)

which equals `Σ_k (T − t) log₂(1 + γ_k)` once `ρ = γ` and `η` takes its
closed-form maximiser, and which is concave in `η` for fixed everything else.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "FpAuxiliaries",
    "beam_gains",
    "refresh",
    "surrogate_f",
    "surrogate_f_from_gains",
    "surrogate_objective",
    "update_eta",
    "update_eta_from_gains",
    "update_rho",
]

import dataclasses
import math
import typing

import numpy as np

from . import errors
from . import model

if typing.TYPE_CHECKING:
    import numpy.typing as npt

    _FloatArray = npt.NDArray[np.float64]


@dataclasses.dataclass(frozen=True)
class FpAuxiliaries:
    """The quadratic-transform auxiliaries.

    Attributes
    ----------
    rho : numpy.ndarray
        Per-user SINR surrogate, `ρ_k ≥ 0`.
    eta : numpy.ndarray
        Per-user quadratic-transform multiplier, `η_k ≥ 0`.
    """

    rho: _FloatArray
    eta: _FloatArray

    def __post_init__(self) -> None:
        for name in ("rho", "eta"):
            array = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(array)) or np.any(array < 0):
                raise errors.ConfigurationError(f"{name} must be finite and non-negative")

            array.setflags(write=False)
            object.__setattr__(self, name, array)

        if self.rho.shape != self.eta.shape:
            raise errors.ConfigurationError("rho and eta must have one entry per user")

    def scaled_eta(self, noise_powers: typing.Sequence[float], /) -> _FloatArray:
        """Return `η_k·δ_k`, the multiplier matching noise-normalised channels."""
        return self.eta * np.sqrt(np.asarray(noise_powers, dtype=np.float64))


def beam_gains(channels: npt.ArrayLike, beams: typing.Union[model.BeamformerSet, npt.ArrayLike], /) -> _FloatArray:
    """Return the `K × K` matrix of `|h_kᴴ w_i|²` (row `k` is the receiving user)."""
    rows = np.atleast_2d(np.asarray(channels, dtype=np.complex128))
    vectors = beams.vectors if isinstance(beams, model.BeamformerSet) else np.atleast_2d(np.asarray(beams))
    return np.abs(rows @ vectors.T) ** 2


def update_rho(gammas: npt.ArrayLike, /) -> _FloatArray:
    """Return the maximising `ρ`, which is the current SINR itself.

    Raises
    ------
    hybris.errors.DomainError
        If any SINR is negative.
    """
    rho = np.array(gammas, dtype=np.float64).reshape(-1)
    if np.any(rho < 0):
        raise errors.DomainError("SINR values can't be negative")

    return rho


def update_eta_from_gains(gains: npt.ArrayLike, rho: npt.ArrayLike, noise_powers: npt.ArrayLike, /) -> _FloatArray:
    """Closed-form `η_k = √((1 + ρ_k)|h_kᴴ w_k|²) / (Σ_i |h_kᴴ w_i|² + δ_k²)` from a gain matrix."""
    gain_matrix = np.asarray(gains, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    denominator = gain_matrix.sum(axis=1) + np.asarray(noise_powers, dtype=np.float64)
    return np.sqrt((1.0 + rho) * np.diag(gain_matrix)) / denominator


def update_eta(
    channels: model.ChannelRealization,
    phases: model.HybridPhaseConfig,
    beams: model.BeamformerSet,
    rho: npt.ArrayLike,
    noise_powers: typing.Sequence[float],
    /,
) -> _FloatArray:
    """Return the maximising `η` for the current phases, beams and `ρ`."""
    gains = beam_gains(model.effective_channels(channels, phases), beams)
    return update_eta_from_gains(gains, rho, noise_powers)


def surrogate_f_from_gains(
    gains: npt.ArrayLike, rho: npt.ArrayLike, eta: npt.ArrayLike, noise_powers: npt.ArrayLike, /
) -> _FloatArray:
    """Evaluate every `f_k` from a gain matrix, see `surrogate_f`."""
    gain_matrix = np.asarray(gains, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    denominator = gain_matrix.sum(axis=1) + np.asarray(noise_powers, dtype=np.float64)
    return 2.0 * eta * np.sqrt((1.0 + rho) * np.diag(gain_matrix)) - eta**2 * denominator


def surrogate_f(
    channels: model.ChannelRealization,
    phases: model.HybridPhaseConfig,
    beams: model.BeamformerSet,
    rho: npt.ArrayLike,
    eta: npt.ArrayLike,
    noise_powers: typing.Sequence[float],
    /,
) -> _FloatArray:
    """Evaluate the per-user quadratic-transform terms.

    `f_k = 2η_k √((1 + ρ_k)|h_kᴴ w_k|²) − η_k² (Σ_i |h_kᴴ w_i|² + δ_k²)`

    At the `η` returned by `update_eta` this equals `(1 + ρ_k)γ_k/(1 + γ_k)`.
    """
    gains = beam_gains(model.effective_channels(channels, phases), beams)
    return surrogate_f_from_gains(gains, rho, eta, noise_powers)


def surrogate_objective(rho: npt.ArrayLike, f: npt.ArrayLike, frame_time: float, delivery_time: float, /) -> float:
    """Evaluate `R_sum` in bits.

    Raises
    ------
    hybris.errors.DomainError
        If `delivery_time` is outside `[0, frame_time]`.
    """
    if not 0.0 <= delivery_time <= frame_time:
        raise errors.DomainError(f"delivery time {delivery_time} is outside [0, {frame_time}]")

    rho = np.asarray(rho, dtype=np.float64)
    bracket = float(np.sum(np.log1p(rho)) - np.sum(rho) + np.sum(np.asarray(f, dtype=np.float64)))
    return (frame_time - delivery_time) * bracket / math.log(2.0)


def refresh(gains: npt.ArrayLike, noise_powers: npt.ArrayLike, /) -> FpAuxiliaries:
    """Run `update_rho` then `update_eta` on a gain matrix, making the surrogate tight."""
    gain_matrix = np.asarray(gains, dtype=np.float64)
    noise = np.asarray(noise_powers, dtype=np.float64)
    signal = np.diag(gain_matrix)
    gammas = signal / (np.maximum(gain_matrix.sum(axis=1) - signal, 0.0) + noise)
    rho = update_rho(gammas)
    return FpAuxiliaries(rho=rho, eta=update_eta_from_gains(gain_matrix, rho, noise))
