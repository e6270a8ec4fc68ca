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

import pathlib

from hybris import errors


def test_str_without_block():
    assert str(errors.DomainError("outside")) == "outside"


def test_attach_block_keeps_the_first_block():
    error = errors.SolverFailedError("stuck")

    error.attach_block("beamforming")
    error.attach_block("phase")

    assert error.block == "beamforming"
    assert str(error) == "[beamforming] stuck"


def test_subproblem_infeasible_bounds():
    error = errors.SubproblemInfeasibleError("crossed", lower=0.5, upper=0.25)

    assert (error.lower, error.upper) == (0.5, 0.25)
    assert isinstance(error, errors.InfeasibleError)


def test_initialization_attempts():
    assert errors.InitializationInfeasibleError("none", attempts=4).attempts == 4


def test_configuration_error_is_a_value_error():
    assert isinstance(errors.ConfigurationError("bad"), ValueError)
    assert isinstance(errors.DomainError("bad"), ValueError)


def test_output_error_path():
    assert errors.OutputError("nope", path=pathlib.Path("out.csv")).path == pathlib.Path("out.csv")
