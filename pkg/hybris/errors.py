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
"""Exceptions raised by this package."""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    "CaseInapplicableError",
    "ConfigurationError",
    "DomainError",
    "ExtractionDegenerateError",
    "HybrisError",
    "InfeasibleError",
    "InitializationInfeasibleError",
    "InternalConsistencyError",
    "OutputError",
    "ScenarioInfeasibleError",
    "SolverFailedError",
    "SubproblemInfeasibleError",
]

import typing

if typing.TYPE_CHECKING:
    import pathlib


class HybrisError(Exception):
    """Base class for all the errors raised by this package.

    Attributes
    ----------
    block : typing.Optional[builtins.str]
        Name of the alternating-optimisation block which was running when this
        was raised, if it was raised inside the driver.
    """

    def __init__(self, *args: typing.Any) -> None:
        super().__init__(*args)
        self.block: typing.Optional[str] = None

    def __str__(self) -> str:
        message = super().__str__()
        if self.block is not None:
            return f"[{self.block}] {message}"

        return message

    def attach_block(self, block: str, /) -> None:
        """Record the driver block this error came from.

        The innermost block wins, so later calls don't overwrite it.
        """
        if self.block is None:
            self.block = block


class ConfigurationError(HybrisError, ValueError):
    """Error raised when a configuration or array dimension is invalid."""


class DomainError(HybrisError, ValueError):
    """Error raised when an argument lies outside a function's domain."""


class InfeasibleError(HybrisError):
    """Base class for errors which indicate an empty feasible set."""


class SubproblemInfeasibleError(InfeasibleError):
    """Error raised when a single block subproblem has no feasible point.

    Attributes
    ----------
    lower : typing.Optional[builtins.float]
        The tightest lower bound on the block variable, if known.
    upper : typing.Optional[builtins.float]
        The tightest upper bound on the block variable, if known.
    """

    def __init__(
        self, message: str, /, *, lower: typing.Optional[float] = None, upper: typing.Optional[float] = None
    ) -> None:
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class InitializationInfeasibleError(InfeasibleError):
    """Error raised when no feasible starting point could be found.

    Attributes
    ----------
    attempts : builtins.int
        How many phase draws were tried.
    """

    def __init__(self, message: str, /, *, attempts: int = 0) -> None:
        super().__init__(message)
        self.attempts = attempts


class ScenarioInfeasibleError(InfeasibleError):
    """Error raised when a closed-form scenario leaves no transmission time."""


class InternalConsistencyError(HybrisError, RuntimeError):
    """Error raised when a subproblem solve lowered its own objective."""


class ExtractionDegenerateError(HybrisError):
    """Error raised when a lifted phase solution has a vanishing anchor entry."""


class CaseInapplicableError(HybrisError):
    """Error raised when a closed-form case's preconditions don't hold."""


class SolverFailedError(HybrisError):
    """Error raised when every configured conic solver failed on a problem."""


class OutputError(HybrisError):
    """Error raised when a result file couldn't be written.

    Attributes
    ----------
    path : pathlib.Path
        The file which couldn't be written.
    """

    def __init__(self, message: str, /, *, path: pathlib.Path) -> None:
        super().__init__(message)
        self.path = path
