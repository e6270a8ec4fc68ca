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
"""Throughput optimisation for RIS downlinks mixing delivered and fixed phase shifts.

A reconfigurable surface is split into a coherent part, whose optimised
phases cost delivery time over a control link, and a fixed part with random
phases that cost nothing. This package jointly picks the delivery time, the
BS beamformers and the coherent phases to maximise the frame throughput,
analyses the single-user special case in closed form and runs Monte-Carlo
sweeps over the system parameters.
"""

from __future__ import annotations

__all__: typing.Sequence[str] = [
    # /__init__.py
    "__author__",
    "__copyright__",
    "__license__",
    "__version__",
    # /analysis.py
    "analysis",
    "analyze_scenario",
    "brute_force_n",
    "BruteForceResult",
    "Case1Feasibility",
    "Case2Feasibility",
    "feasible_case1",
    "feasible_case2",
    "integer_pair",
    "lambert_w0",
    "n_star_case1",
    "n_star_case2",
    "objective",
    "optimal_snr",
    "SimpleScenario",
    "snr_lower_bound",
    "t_star",
    "TimeRule",
    # /channels.py
    "channels",
    "FadingParams",
    "generate",
    "Geometry",
    "path_loss",
    "realization",
    "rician_sample",
    "user_positions",
    # /config.py
    "config",
    "AnalysisConfig",
    "dbm_to_watts",
    "default_fading",
    "default_geometry",
    "load_json",
    "ResolvedConfig",
    "SolverOptions",
    "table_defaults",
    "watts_to_dbm",
    # /errors.py
    "errors",
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
    # /fractional.py
    "fractional",
    "beam_gains",
    "FpAuxiliaries",
    "refresh",
    "surrogate_f",
    "surrogate_f_from_gains",
    "surrogate_objective",
    "update_eta",
    "update_eta_from_gains",
    "update_rho",
    # /model.py
    "model",
    "BeamformerSet",
    "ChannelRealization",
    "check_feasibility",
    "effective_channel",
    "effective_channels",
    "energy_used",
    "FeasibilityReport",
    "HybridPhaseConfig",
    "sinr",
    "Solution",
    "SystemConfig",
    "throughput",
    # /optimizer.py
    "optimizer",
    "AlternatingOptimizer",
    "initialize",
    "IterationRecord",
    "OptimizerState",
    "solve",
    "SolveTrace",
    "step",
    # /retry.py
    "retry",
    "ErrorRouter",
    "ExponentialSchedule",
    "Retry",
    # /subproblems.py
    "subproblems",
    "build_h1",
    "extract_phases",
    "LiftedBeam",
    "LiftedPhase",
    "linearize_trace",
    "rate_thresholds",
    "solve_beamforming",
    "solve_delivery_time",
    "solve_minimum_power",
    "solve_phase",
    "transmit_budget",
    # /sweeps.py
    "sweeps",
    "as_preset",
    "baseline_config",
    "BASELINES",
    "emit",
    "get_preset",
    "InstanceOutcome",
    "preset_names",
    "run_scenario",
    "ScenarioSpec",
    "SweepPoint",
    "SweepResult",
]

import typing

from .analysis import *
from .channels import *
from .config import *
from .errors import *
from .fractional import *
from .model import *
from .optimizer import *
from .retry import *
from .subproblems import *
from .sweeps import *

__author__ = "The Hybris contributors"
__copyright__ = "© 2021 The Hybris contributors"
__license__ = "BSD"
__version__ = "0.1.0"
