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

# pyright: reportUnknownMemberType=none
# This leads to too many false-positives around mocks.

import os
from unittest import mock

import numpy as np
import pytest

from hybris import channels
from hybris import config as config_
from hybris import errors
from hybris import model
from hybris import optimizer
from hybris import subproblems

_OPTIONS = config_.SolverOptions(max_outer_iters=3, init_retries=2)


def _record(iteration: int, surrogate: float) -> optimizer.IterationRecord:
    return optimizer.IterationRecord(
        iteration=iteration,
        surrogate=surrogate,
        throughput=surrogate,
        delivery_time=0.1,
        energy_slack=0.0,
        min_rate_slack=0.0,
        wall_time=0.01,
    )


def _single_link_config(n_coherent: int, n_fixed: int, noise_power: float) -> model.SystemConfig:
    return model.SystemConfig(
        antennas=1,
        users=1,
        n_coherent=n_coherent,
        n_fixed=n_fixed,
        bits=1,
        delivery_rate=25.0,
        frame_time=1.0,
        delivery_power=0.1,
        energy_budget=1.0,
        min_rates=0.0,
        noise_powers=noise_power,
    )


class TestSolveTrace:
    def test_iterations_skip_the_start(self):
        trace = optimizer.SolveTrace([_record(0, 1.0), _record(1, 2.0), _record(2, 2.5)])

        assert trace.iterations == 2
        assert trace.surrogates == [1.0, 2.0, 2.5]

    def test_empty_trace(self):
        assert optimizer.SolveTrace().iterations == 0

    @pytest.mark.parametrize(
        ("values", "expected"), [((1.0, 2.0, 2.0), True), ((1.0, 2.0, 1.5), False), ((1.0, 1.0 - 1e-8), True)]
    )
    def test_is_monotone(self, values, expected: bool):
        trace = optimizer.SolveTrace([_record(index, value) for index, value in enumerate(values)])

        assert trace.is_monotone() is expected

    def test_to_dict(self):
        record = optimizer.IterationRecord(
            iteration=1,
            surrogate=2.0,
            throughput=2.0,
            delivery_time=0.1,
            energy_slack=0.5,
            min_rate_slack=0.25,
            wall_time=0.01,
            rejected_blocks=("phase",),
        )
        trace = optimizer.SolveTrace([record], status="converged")

        assert trace.to_dict() == {
            "status": "converged",
            "records": [
                {
                    "iteration": 1,
                    "surrogate": 2.0,
                    "throughput": 2.0,
                    "delivery_time": 0.1,
                    "energy_slack": 0.5,
                    "min_rate_slack": 0.25,
                    "wall_time": 0.01,
                    "rejected_blocks": ["phase"],
                }
            ],
        }


class TestInitialize:
    def test_starts_feasible_at_the_minimum_delivery_time(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        solution, lifted_beam, lifted_phase = optimizer.initialize(
            small_config, small_channels, np.random.default_rng(0), options=_OPTIONS
        )

        assert solution.delivery_time == pytest.approx(small_config.min_delivery_time)
        assert model.check_feasibility(solution, small_config, small_channels).feasible is True
        np.testing.assert_allclose(lifted_beam.vectors, solution.beams.vectors)
        np.testing.assert_allclose(
            subproblems.extract_phases(lifted_phase), solution.phases.theta_coherent, atol=1e-12
        )

    def test_delivery_fills_the_frame(self, small_config: model.SystemConfig, small_channels: model.ChannelRealization):
        config = small_config.replace(delivery_rate=2.0)

        with pytest.raises(errors.InitializationInfeasibleError):
            optimizer.initialize(config, small_channels, np.random.default_rng(0), options=_OPTIONS)

    def test_delivery_exhausts_the_energy_budget(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        config = small_config.replace(energy_budget=0.01)

        with pytest.raises(errors.InitializationInfeasibleError):
            optimizer.initialize(config, small_channels, np.random.default_rng(0), options=_OPTIONS)

    def test_gives_up_after_every_retry(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        config = small_config.replace(min_rates=100.0)

        with mock.patch.object(
            subproblems, "solve_minimum_power", side_effect=errors.SubproblemInfeasibleError("no")
        ) as solve_minimum_power:
            with pytest.raises(errors.InitializationInfeasibleError) as exc_info:
                optimizer.initialize(config, small_channels, np.random.default_rng(0), options=_OPTIONS)

        assert exc_info.value.attempts == 3
        assert solve_minimum_power.call_count == 3

    def test_single_draw_without_coherent_elements(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        config = small_config.replace(n_coherent=0, n_fixed=5, min_rates=100.0)

        with mock.patch.object(
            subproblems, "solve_minimum_power", side_effect=errors.SubproblemInfeasibleError("no")
        ):
            with pytest.raises(errors.InitializationInfeasibleError) as exc_info:
                optimizer.initialize(config, small_channels.repartition(0), np.random.default_rng(0), options=_OPTIONS)

        assert exc_info.value.attempts == 1

    def test_rejects_mismatched_channels(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        with pytest.raises(errors.ConfigurationError):
            optimizer.AlternatingOptimizer(small_config, small_channels.repartition(1))


class TestStep:
    def test_does_not_lower_the_surrogate(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        driver = optimizer.AlternatingOptimizer(small_config, small_channels, options=_OPTIONS)
        state = driver.initialize(np.random.default_rng(0))

        result = optimizer.step(state)

        assert result.iteration == 1
        assert result.aux is not None
        assert result.surrogate >= state.surrogate * (1 - 1e-6)
        assert result.delivery_time >= small_config.min_delivery_time * (1 - 1e-9)
        assert result.solution.objective >= result.surrogate * (1 - 1e-6)
        assert model.check_feasibility(result.solution, small_config, small_channels, tolerance=1e-5).feasible

    def test_tags_errors_with_their_block(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        driver = optimizer.AlternatingOptimizer(small_config, small_channels, options=_OPTIONS)
        state = driver.initialize(np.random.default_rng(0))

        with mock.patch.object(subproblems, "solve_beamforming", side_effect=errors.SolverFailedError("stuck")):
            with pytest.raises(errors.SolverFailedError) as exc_info:
                driver.step(state)

        assert exc_info.value.block == optimizer.BEAMFORMING_BLOCK
        assert str(exc_info.value) == "[beamforming] stuck"

    def test_rejects_a_worse_beam_candidate(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        driver = optimizer.AlternatingOptimizer(small_config, small_channels, options=_OPTIONS)
        state = driver.initialize(np.random.default_rng(0))
        zero = np.zeros((2, 2), dtype=np.complex128)
        worse = subproblems.LiftedBeam(np.zeros((2, 2, 2)), zero, objective=0.0)

        with mock.patch.object(subproblems, "solve_beamforming", return_value=worse):
            result = driver.step(state)

        assert optimizer.BEAMFORMING_BLOCK in result.rejected_blocks
        # Only the common power scaling may have touched the kept beams.
        np.testing.assert_allclose(
            result.beams.vectors, state.beams.scaled_to(result.beams.total_power).vectors, rtol=1e-9, atol=1e-12
        )

    def test_fills_the_transmit_budget(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        driver = optimizer.AlternatingOptimizer(small_config.replace(min_rates=0.0), small_channels, options=_OPTIONS)
        state = driver.initialize(np.random.default_rng(0))

        result = driver.step(state)

        budget = subproblems.transmit_budget(driver.config, result.delivery_time)
        assert result.beams.total_power == pytest.approx(budget, rel=1e-6)


class TestSolve:
    def test_trace_is_monotone_and_the_result_feasible(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        solution, trace = optimizer.solve(small_config, small_channels, _OPTIONS, rng=np.random.default_rng(0))

        assert trace.status in ("converged", "max-iters")
        assert 1 <= trace.iterations <= _OPTIONS.max_outer_iters
        assert len(trace.records) == trace.iterations + 1
        assert trace.is_monotone()
        assert solution.objective >= trace.records[0].throughput
        assert model.check_feasibility(solution, small_config, small_channels, tolerance=1e-5).feasible

    def test_is_reproducible(self, small_config: model.SystemConfig, small_channels: model.ChannelRealization):
        options = _OPTIONS.replace(max_outer_iters=1, seed=9)

        first, _ = optimizer.solve(small_config, small_channels, options)
        second, _ = optimizer.solve(small_config, small_channels, options)

        np.testing.assert_array_equal(first.phases.theta_fixed, second.phases.theta_fixed)
        assert first.objective == pytest.approx(second.objective, rel=1e-6)

    def test_without_coherent_elements(
        self, small_config: model.SystemConfig, small_channels: model.ChannelRealization
    ):
        config = small_config.replace(n_coherent=0, n_fixed=5)

        solution, trace = optimizer.solve(config, small_channels.repartition(0), _OPTIONS)

        assert solution.delivery_time == 0.0
        assert solution.phases.theta_coherent.size == 0
        assert trace.is_monotone()

    @pytest.mark.parametrize("noise_power", [1e-2, 1e-4])
    def test_single_link_spends_the_whole_energy_budget(self, noise_power: float):
        config = _single_link_config(0, 2, noise_power)
        draw = model.ChannelRealization.from_stacked([[0.5], [0.5]], [[1.0, 1.0]], 0)

        solution, trace = optimizer.solve(config, draw, config_.SolverOptions(max_outer_iters=10))

        gain = float(np.abs(model.effective_channels(draw, solution.phases)[0, 0]) ** 2)
        assert solution.delivery_time == 0.0
        assert solution.beams.total_power == pytest.approx(config.energy_budget / config.frame_time, rel=1e-6)
        assert solution.objective == pytest.approx(np.log2(1.0 + gain * config.energy_budget / noise_power), rel=1e-6)
        assert trace.is_monotone()

    def test_single_link_aligns_the_coherent_phases(self):
        config = _single_link_config(2, 0, 1.0)
        draw = model.ChannelRealization.from_stacked([[1.0], [0.8]], [[0.6 * np.exp(0.4j), 0.5 * np.exp(-1.1j)]], 2)
        delivery_time = config.min_delivery_time
        power = subproblems.transmit_budget(config, delivery_time)
        coefficients = subproblems.build_h1(draw, np.zeros(0), 0)[:-1, 0]
        phasors = np.exp(1j * np.arange(720) * 2.0 * np.pi / 720)
        gains = np.abs(coefficients[0] * phasors[:, np.newaxis] + coefficients[1] * phasors[np.newaxis, :]) ** 2
        grid_best = (config.frame_time - delivery_time) * float(np.log2(1.0 + np.max(gains) * power))

        solution, trace = optimizer.solve(config, draw, config_.SolverOptions(max_outer_iters=10))

        assert solution.delivery_time == pytest.approx(delivery_time, rel=1e-9)
        assert solution.objective == pytest.approx(grid_best, rel=1e-4)
        assert trace.is_monotone()


@pytest.mark.skipif(not os.getenv("HYBRIS_RUN_SLOW"), reason="set HYBRIS_RUN_SLOW to run the reference system")
def test_reference_system_solution_is_feasible():
    config = config_.table_defaults()
    draw = channels.realization(config_.default_geometry(), config_.default_fading(), config, 0, 0)

    solution, trace = optimizer.solve(config, draw, config_.SolverOptions(max_outer_iters=10))

    report = model.check_feasibility(solution, config, draw)
    assert report.energy_slack >= -1e-6
    assert report.min_rate_slack >= -1e-6
    assert report.delivery_slack >= -1e-6
    assert trace.is_monotone()


@pytest.mark.skipif(not os.getenv("HYBRIS_RUN_SLOW"), reason="set HYBRIS_RUN_SLOW to run the random instances")
@pytest.mark.parametrize("seed", range(20))
def test_trace_is_monotone_on_random_instances(small_config: model.SystemConfig, seed: int):
    rng = np.random.default_rng(seed)
    shape = (small_config.n_elements, small_config.antennas)
    bs_ris = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    shape = (small_config.users, small_config.n_elements)
    ris_user = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    draw = model.ChannelRealization.from_stacked(bs_ris, ris_user, small_config.n_coherent)

    solution, trace = optimizer.solve(small_config, draw, config_.SolverOptions(max_outer_iters=15, seed=seed))

    assert trace.is_monotone()
    assert solution.objective >= trace.records[0].throughput * (1 - 1e-9)
    assert model.check_feasibility(solution, small_config, draw, tolerance=1e-5).feasible
