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
"""Utilities used for bounded retries, growth schedules and routing errors out of optimiser blocks.

These cover cases such as redrawing an infeasible starting point, escalating
a penalty weight while a relaxation stays above rank one and counting
per-instance failures during a sweep without aborting it.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = ["ErrorRouter", "ExponentialSchedule", "Retry"]

import math
import typing

from . import errors

if typing.TYPE_CHECKING:
    import types


_RouteT = typing.Tuple[typing.Tuple[typing.Type[BaseException], ...], typing.Callable[[typing.Any], None]]


class Retry:
    """Used to bound a synchronous retry loop.

    This class acts as an iterator which yields the current attempt index
    (starting at `0`) until either `Retry.finish` is called or
    "max_retries" extra attempts have been made.

    Other Parameters
    ----------------
    max_retries : typing.Optional[builtins.int]
        The maximum amount of retries made after the first attempt between
        resets. If left as `builtins.None` then this iterator will be unlimited.
        This must be greater than or equal to 0.

    Raises
    ------
    ValueError
        If `max_retries` is less than 0.

    Examples
    --------
    ```py
    retry = Retry(5)
    for attempt in retry:
        phases = draw_phases(rng)
        if is_feasible(phases):
            # Alternatively `break` can be used to leave the loop.
            retry.finish()

    if retry.is_depleted:
        raise RuntimeError(f"No feasible draw after {retry.attempts} attempts")
    ```
    """

    __slots__ = ("_attempts", "_finished", "_max_retries")

    def __init__(self, max_retries: typing.Optional[int] = None) -> None:
        if max_retries is not None and max_retries < 0:
            raise ValueError("max_retries must be greater than or equal to 0")

        self._attempts = 0
        self._finished = False
        self._max_retries = max_retries

    def __iter__(self) -> Retry:
        return self

    def __next__(self) -> int:
        if self._finished or self.is_depleted:
            raise StopIteration

        self._attempts += 1
        return self._attempts - 1

    @property
    def attempts(self) -> int:
        """How many attempts have been started since the last reset."""
        return self._attempts

    @property
    def is_depleted(self) -> bool:
        """Whether "max_retries" has been reached.

        This can be used to workout whether the loop was explicitly broken out
        of using `Retry.finish`/`break` or if it ran out of attempts.

        Returns
        -------
        builtins.bool
            If every allowed attempt has been started.
        """
        return self._max_retries is not None and self._attempts > self._max_retries

    @property
    def is_finished(self) -> bool:
        """Whether `Retry.finish` was called since the last reset."""
        return self._finished

    def finish(self) -> None:
        """Mark the iterator as finished to break out of the current loop."""
        self._finished = True

    def reset(self) -> None:
        """Reset the iterator to it's original state to reuse it."""
        self._attempts = 0
        self._finished = False


class ExponentialSchedule:
    """A deterministic, capped exponential sequence.

    Each call to `next` returns `multiplier * base ** increment` and then
    increments the exponent, with every value capped at `maximum`.

    Other Parameters
    ----------------
    base : builtins.float
        The base to use. Defaults to `2.0`.
    maximum : builtins.float
        The max value this can return. Defaults to `64.0`.
    multiplier : builtins.float
        Scale applied to every value. Defaults to `1.0`.
    initial_increment : builtins.int
        The initial increment to start at. Defaults to `0`.

    Raises
    ------
    ValueError
        If a non-finite or non-positive value is passed for `base`,
        `maximum` or `multiplier` or if `initial_increment` is negative.
    """

    __slots__ = ("_base", "_increment", "_initial_increment", "_maximum", "_multiplier")

    def __init__(
        self, *, base: float = 2.0, maximum: float = 64.0, multiplier: float = 1.0, initial_increment: int = 0
    ) -> None:
        for name, value in (("base", base), ("maximum", maximum), ("multiplier", multiplier)):
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a finite positive number")

        if initial_increment < 0:
            raise ValueError("initial_increment must be greater than or equal to 0")

        self._base = float(base)
        self._increment = initial_increment
        self._initial_increment = initial_increment
        self._maximum = float(maximum)
        self._multiplier = float(multiplier)

    def __iter__(self) -> ExponentialSchedule:
        return self

    def __next__(self) -> float:
        try:
            value = self._multiplier * self._base**self._increment

        except OverflowError:
            return self._maximum

        if value >= self._maximum:
            return self._maximum

        self._increment += 1
        return value

    @property
    def increment(self) -> int:
        """The exponent the next value will be calculated with."""
        return self._increment

    def reset(self) -> None:
        """Reset the schedule to its initial increment."""
        self._increment = self._initial_increment


class ErrorRouter:
    """Context manager which tags and routes the errors raised inside one block.

    Any `hybris.errors.HybrisError` escaping the block is first tagged with
    `block` (when one is given). The error is then handed to the first route
    whose exception types it matches and suppressed; errors no route matches
    propagate unchanged.

    Parameters
    ----------
    block : typing.Optional[builtins.str]
        Name of the optimiser block this guards, if any.

    Examples
    --------
    ```py
    router = (
        ErrorRouter()
        .route(errors.InfeasibleError, handler=lambda exc: counts.update(["infeasible"]))
        .route(errors.SolverFailedError, handler=lambda exc: counts.update(["failed"]))
    )
    with router:
        result = solve(instance)

    if router.handled is not None:
        ...
    ```
    """

    __slots__ = ("_block", "_handled", "_routes")

    def __init__(self, block: typing.Optional[str] = None, /) -> None:
        self._block = block
        self._handled: typing.Optional[BaseException] = None
        self._routes: typing.List[_RouteT] = []

    def __enter__(self) -> ErrorRouter:
        self._handled = None
        return self

    def __exit__(
        self,
        exception_type: typing.Optional[typing.Type[BaseException]],
        exception: typing.Optional[BaseException],
        exception_traceback: typing.Optional[types.TracebackType],
    ) -> bool:
        if exception is None:
            return False

        if self._block is not None and isinstance(exception, errors.HybrisError):
            exception.attach_block(self._block)

        for exceptions, handler in self._routes:
            if isinstance(exception, exceptions):
                handler(exception)
                self._handled = exception
                return True

        return False

    @property
    def block(self) -> typing.Optional[str]:
        """Name errors escaping this are tagged with."""
        return self._block

    @property
    def handled(self) -> typing.Optional[BaseException]:
        """The error the last `with` block suppressed, if any."""
        return self._handled

    def route(
        self, *exceptions: typing.Type[BaseException], handler: typing.Callable[[typing.Any], None]
    ) -> ErrorRouter:
        """Suppress `exceptions` raised inside the block after passing them to `handler`.

        Routes are checked in the order they were added.

        Returns
        -------
        ErrorRouter
            This router, to allow chained calls.

        Raises
        ------
        ValueError
            If no exception types are passed.
        """
        if not exceptions:
            raise ValueError("at least one exception type must be routed")

        self._routes.append((exceptions, handler))
        return self
