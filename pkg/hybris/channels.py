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
"""Geometry driven path loss and Rician fading channel generation."""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "FadingParams",
    "Geometry",
    "generate",
    "path_loss",
    "realization",
    "rician_sample",
    "user_positions",
]

import dataclasses
import math
import typing

import numpy as np

from . import errors
from . import model

if typing.TYPE_CHECKING:
    import numpy.typing as npt


@dataclasses.dataclass(frozen=True)
class Geometry:
    """Planar layout of the BS, the RIS and the user circle, in meters."""

    bs_pos: typing.Tuple[float, float] = (0.0, 0.0)
    ris_pos: typing.Tuple[float, float] = (50.0, 10.0)
    user_circle_center: typing.Tuple[float, float] = (50.0, 0.0)
    user_circle_radius: float = 5.0

    def __post_init__(self) -> None:
        for name in ("bs_pos", "ris_pos", "user_circle_center"):
            value = tuple(float(coordinate) for coordinate in getattr(self, name))
            if len(value) != 2 or not all(math.isfinite(coordinate) for coordinate in value):
                raise errors.ConfigurationError(f"{name} must be a finite 2D coordinate")

            object.__setattr__(self, name, value)

        # A zero radius is allowed and collapses every user onto the centre.
        if not math.isfinite(self.user_circle_radius) or self.user_circle_radius < 0:
            raise errors.ConfigurationError("user_circle_radius must be finite and non-negative")

        if self.bs_pos == self.ris_pos:
            raise errors.ConfigurationError("the BS and the RIS can't share a position")

    @property
    def bs_ris_distance(self) -> float:
        return math.dist(self.bs_pos, self.ris_pos)

    def with_ris_user_distance(self, distance: float, /) -> Geometry:
        """Return a copy with the user circle centred `distance` meters straight below the RIS."""
        if distance <= 0:
            raise errors.ConfigurationError("the RIS-user distance must be positive")

        return dataclasses.replace(self, user_circle_center=(self.ris_pos[0], self.ris_pos[1] - distance))


@dataclasses.dataclass(frozen=True)
class FadingParams:
    """Large and small scale fading parameters.

    Attributes
    ----------
    alpha_br : builtins.float
        Path-loss exponent of the BS→RIS link.
    alpha_ru : builtins.float
        Path-loss exponent of the RIS→user links.
    rician_factor : builtins.float
        Linear LOS to scatter power ratio; `math.inf` gives pure LOS.
    pl0_db : builtins.float
        Path loss at the 1 m reference distance in dB.
    """

    alpha_br: float = 2.2
    alpha_ru: float = 2.2
    rician_factor: float = 3.0
    pl0_db: float = -30.0

    def __post_init__(self) -> None:
        if not self.alpha_br > 0 or not self.alpha_ru > 0:
            raise errors.ConfigurationError("path-loss exponents must be positive")

        if not self.rician_factor >= 0:
            raise errors.ConfigurationError("rician_factor must be non-negative")

        if not math.isfinite(self.pl0_db):
            raise errors.ConfigurationError("pl0_db must be finite")


def path_loss(distance: float, alpha: float, pl0_db: float, /) -> float:
    """Linear power gain `10^(PL0/10) · d^(−α)` of a link.

    Raises
    ------
    hybris.errors.DomainError
        If `distance` isn't positive.
    """
    if not distance > 0:
        raise errors.DomainError(f"link distance must be positive, not {distance}")

    return 10.0 ** (pl0_db / 10.0) * distance ** (-alpha)


def rician_sample(
    rows: int, cols: int, rician_factor: float, rng: np.random.Generator, /
) -> npt.NDArray[np.complex128]:
    """Draw a Rician faded `rows × cols` matrix with unit per-entry second moment.

    The LOS component is the all-ones matrix. The scatter is drawn with a
    trailing real/imaginary axis so a draw with more rows extends (rather
    than reshuffles) a draw with fewer rows from the same stream.

    Raises
    ------
    hybris.errors.DomainError
        If `rician_factor` is negative.
    """
    if not rician_factor >= 0:
        raise errors.DomainError("rician_factor must be non-negative")

    if math.isinf(rician_factor):
        return np.ones((rows, cols), dtype=np.complex128)

    parts = rng.standard_normal((rows, cols, 2))
    scatter = (parts[..., 0] + 1j * parts[..., 1]) / math.sqrt(2.0)
    los_weight = math.sqrt(rician_factor / (1.0 + rician_factor))
    return los_weight + math.sqrt(1.0 / (1.0 + rician_factor)) * scatter


def user_positions(geometry: Geometry, users: int, rng: np.random.Generator, /) -> npt.NDArray[np.float64]:
    """Draw `users` positions uniformly over the user disk as a `K × 2` array."""
    draws = rng.random((users, 2))
    radius = geometry.user_circle_radius * np.sqrt(draws[:, 0])
    angle = 2.0 * math.pi * draws[:, 1]
    centre = np.asarray(geometry.user_circle_center)
    return centre + np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))


def generate(
    geometry: Geometry, fading: FadingParams, config: model.SystemConfig, rng: np.random.Generator, /
) -> model.ChannelRealization:
    """Generate one channel realization.

    Positions, the BS→RIS matrix and the RIS→user vectors come from three
    independent child streams of `rng` so changing one dimension leaves the
    other draws untouched. Each block is scaled by the square root of its
    link's path loss and the first `N_coh` elements form the coherent part.

    Parameters
    ----------
    geometry : Geometry
    fading : FadingParams
    config : hybris.model.SystemConfig
        Source of `M`, `K`, `N_coh` and `N_fix`.
    rng : numpy.random.Generator
        Stream this draws from; it must be seeded from a
        `numpy.random.SeedSequence` so it can spawn children.

    Returns
    -------
    hybris.model.ChannelRealization
    """
    position_rng, bs_ris_rng, ris_user_rng = rng.spawn(3)
    positions = user_positions(geometry, config.users, position_rng)

    bs_ris_gain = path_loss(geometry.bs_ris_distance, fading.alpha_br, fading.pl0_db)
    bs_ris = math.sqrt(bs_ris_gain) * rician_sample(
        config.n_elements, config.antennas, fading.rician_factor, bs_ris_rng
    )

    distances = np.linalg.norm(positions - np.asarray(geometry.ris_pos), axis=1)
    user_gains = np.array([path_loss(float(distance), fading.alpha_ru, fading.pl0_db) for distance in distances])
    # Drawn element-major so adding elements extends every user's vector.
    ris_user = rician_sample(config.n_elements, config.users, fading.rician_factor, ris_user_rng).T
    ris_user = np.sqrt(user_gains)[:, np.newaxis] * ris_user
    return model.ChannelRealization.from_stacked(bs_ris, ris_user, config.n_coherent)


def realization(
    geometry: Geometry, fading: FadingParams, config: model.SystemConfig, seed: int, index: int, /
) -> model.ChannelRealization:
    """Generate the `index`-th realization of a Monte-Carlo run seeded with `seed`.

    `(seed, index)` fully determines the result.
    """
    return generate(geometry, fading, config, np.random.default_rng(np.random.SeedSequence([seed, index])))
