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

import json
import math
import os
import pathlib
import typing
from unittest import mock

import numpy as np
import pandas as pd
import pytest

from hybris import config as config_
from hybris import errors
from hybris import model
from hybris import optimizer
from hybris import sweeps


def _fake_solve(system: model.SystemConfig, draw: model.ChannelRealization, options, /, *, rng):
    phases = model.HybridPhaseConfig(np.zeros(system.n_coherent), np.zeros(system.n_fixed))
    beams = model.BeamformerSet(np.zeros((system.users, system.antennas)))
    solution = model.Solution(phases, beams, system.min_delivery_time, np.full(system.users, 2.0))
    return solution, mock.Mock(optimizer.SolveTrace, iterations=3)


@pytest.fixture()
def fake_solver():
    feasible = mock.Mock(model.FeasibilityReport, feasible=True)
    with mock.patch.object(optimizer, "solve", side_effect=_fake_solve) as solve:
        with mock.patch.object(model, "check_feasibility", return_value=feasible):
            yield solve


def _spec(**changes) -> sweeps.ScenarioSpec:
    fields = dict(scenario="test", parameter="N_coh", grid=(2, 4), realizations=2)
    fields.update(changes)
    return sweeps.ScenarioSpec(**fields)


def _outcome(status: str, throughput: float = math.nan, **changes) -> sweeps.InstanceOutcome:
    fields = dict(series=None, grid_index=0, grid_value=1.0, realization=0, baseline="proposed", status=status)
    fields.update(changes)
    return sweeps.InstanceOutcome(throughput=throughput, **fields)


class TestScenarioSpec:
    @pytest.mark.parametrize(
        "changes",
        [
            {"grid": ()},
            {"grid": (1, 3, 2)},
            {"grid": (1, 1)},
            {"realizations": 0},
            {"baselines": ("proposed", "oracle")},
            {"baselines": ()},
            {"b_variant_bits": 0},
            {"overrides": {"N_coh": 3}},
            {"series": {"bad": {"not_a_key": 1}}},
            {"overrides": {"K": 0}},
        ],
    )
    def test_rejects_invalid_specs(self, changes):
        with pytest.raises(errors.ConfigurationError):
            _spec(**changes)

    def test_accepts_a_decreasing_grid(self):
        assert _spec(grid=(4, 2)).grid == (4, 2)

    def test_resolve(self):
        spec = _spec(overrides={"R_F_bps": 25.0}, series={"two": {"K": 2}}, solver={"max_outer_iters": 5})

        resolved = spec.resolve("two", 4)

        assert resolved.system.n_coherent == 4
        assert resolved.system.users == 2
        assert resolved.system.delivery_rate == 25.0
        assert resolved.solver.max_outer_iters == 5
        assert resolved.seed == spec.seed

    def test_series_labels(self):
        assert _spec().series_labels == (None,)
        assert _spec(series={"a": {}, "b": {"M": 4}}).series_labels == ("a", "b")

    def test_dict_form(self):
        spec = _spec(series={"a": {"M": 4}}, baselines=("proposed", "fully_fixed"))

        data = json.loads(json.dumps(spec.to_dict()))

        assert sweeps.ScenarioSpec.from_dict(data) == spec

    @pytest.mark.parametrize("data", [{"scenario": "x", "parameter": "N_coh"}, {"scenario": "x", "colour": "red"}])
    def test_from_dict_rejects_bad_keys(self, data):
        with pytest.raises(errors.ConfigurationError):
            sweeps.ScenarioSpec.from_dict(data)


class TestBaselineConfig:
    def test_proposed(self):
        base = config_.table_defaults()

        assert sweeps.baseline_config(base, "proposed") is base

    def test_fully_coherent(self):
        result = sweeps.baseline_config(config_.table_defaults(), "fully_coherent")

        assert (result.n_coherent, result.n_fixed) == (12, 0)

    def test_fully_fixed(self):
        result = sweeps.baseline_config(config_.table_defaults(), "fully_fixed")

        assert (result.n_coherent, result.n_fixed) == (0, 12)
        assert result.min_delivery_time == 0.0

    def test_b_variant(self):
        assert sweeps.baseline_config(config_.table_defaults(), "b_variant", b_variant_bits=3).bits == 3

    def test_unknown(self):
        with pytest.raises(errors.ConfigurationError):
            sweeps.baseline_config(config_.table_defaults(), "oracle")


class TestSweepPoint:
    def test_aggregate(self):
        outcomes = [
            _outcome("feasible", 2.0, delivery_time=0.2, iterations=4),
            _outcome("feasible", 4.0, delivery_time=0.4, iterations=6),
            _outcome("infeasible"),
            _outcome("failed"),
        ]

        point = sweeps.SweepPoint.aggregate(outcomes)

        assert point.mean_tput == pytest.approx(3.0)
        assert point.stderr == pytest.approx(math.sqrt(2.0) / math.sqrt(2.0))
        assert (point.n_feasible, point.n_infeasible, point.n_failed) == (2, 1, 1)
        assert point.mean_t == pytest.approx(0.3)
        assert point.mean_iters == pytest.approx(5.0)

    def test_single_feasible_instance(self):
        point = sweeps.SweepPoint.aggregate([_outcome("feasible", 2.0, delivery_time=0.1)])

        assert point.stderr == 0.0

    def test_without_feasible_instances(self):
        point = sweeps.SweepPoint.aggregate([_outcome("infeasible"), _outcome("infeasible")])

        assert math.isnan(point.mean_tput)
        assert point.to_dict()["mean_tput"] is None
        assert point.to_dict()["n_infeasible"] == 2


class TestRunInstance:
    def _job(self, baseline: str = "proposed") -> sweeps._Job:
        spec = _spec()
        return sweeps._Job(None, 0, 2.0, 1, baseline, spec.resolve(None, 2), 2)

    def test_feasible(self, fake_solver: mock.Mock):
        outcome = sweeps._run_instance(self._job())

        assert outcome.status == "feasible"
        assert outcome.throughput == pytest.approx(8.0)
        assert outcome.delivery_time == pytest.approx(0.2)
        assert outcome.iterations == 3

    def test_infeasible(self):
        with mock.patch.object(optimizer, "solve", side_effect=errors.InitializationInfeasibleError("none")):
            outcome = sweeps._run_instance(self._job())

        assert outcome.status == "infeasible"
        assert math.isnan(outcome.throughput)

    @pytest.mark.parametrize("error", [errors.SolverFailedError("stuck"), FloatingPointError("overflow")])
    def test_failed(self, error: Exception):
        with mock.patch.object(optimizer, "solve", side_effect=error):
            outcome = sweeps._run_instance(self._job())

        assert outcome.status == "failed"

    def test_result_outside_the_feasible_set_counts_as_failed(self):
        with mock.patch.object(optimizer, "solve", side_effect=_fake_solve):
            with mock.patch.object(model, "check_feasibility", return_value=mock.Mock(feasible=False)):
                outcome = sweeps._run_instance(self._job())

        assert outcome.status == "failed"

    def test_unexpected_errors_propagate(self):
        with mock.patch.object(optimizer, "solve", side_effect=KeyError("bug")):
            with pytest.raises(KeyError):
                sweeps._run_instance(self._job())

    def test_baselines_share_the_channel_draw(self, fake_solver: mock.Mock):
        sweeps._run_instance(self._job("proposed"))
        sweeps._run_instance(self._job("fully_fixed"))

        first, second = (call.args[1] for call in fake_solver.call_args_list)
        assert (first.n_coherent, second.n_coherent) == (2, 0)
        for left, right in zip(first.stacked(), second.stacked()):
            np.testing.assert_array_equal(left, right)


class TestRunScenario:
    def test_aggregates_every_cell_in_order(self, fake_solver: mock.Mock):
        spec = _spec(baselines=("fully_fixed", "proposed"), series={"a": {}, "b": {"M": 4}})

        result = sweeps.run_scenario(spec)

        assert fake_solver.call_count == 2 * 2 * 2 * 2
        keys = [(point.series, point.grid_value, point.baseline) for point in result.points]
        assert keys == [
            ("a", 2, "proposed"),
            ("a", 2, "fully_fixed"),
            ("a", 4, "proposed"),
            ("a", 4, "fully_fixed"),
            ("b", 2, "proposed"),
            ("b", 2, "fully_fixed"),
            ("b", 4, "proposed"),
            ("b", 4, "fully_fixed"),
        ]
        assert all(point.n_feasible == 2 for point in result.points)
        assert all(point.mean_tput == pytest.approx(8.0) for point in result.points)

    def test_frame_layout(self, fake_solver: mock.Mock):
        result = sweeps.run_scenario(_spec())

        frame = result.to_frame()

        assert list(frame.columns) == [
            "grid_value",
            "baseline",
            "mean_tput",
            "stderr",
            "n_feasible",
            "mean_t",
            "mean_iters",
            "n_infeasible",
            "n_failed",
        ]
        assert len(frame) == 2

    def test_frame_layout_with_series(self, fake_solver: mock.Mock):
        result = sweeps.run_scenario(_spec(series={"a": {}}))

        assert result.to_frame().columns[0] == "series"

    def test_warns_about_grid_points_without_a_transmission_window(
        self, fake_solver: mock.Mock, caplog: pytest.LogCaptureFixture
    ):
        spec = _spec(grid=(4, 12), realizations=1, overrides={"R_F_bps": 10.0})

        with caplog.at_level("WARNING", logger="hybris.sweeps"):
            sweeps.run_scenario(spec)

        messages = [record.getMessage() for record in caplog.records if record.levelname == "WARNING"]
        assert len(messages) == 1
        assert "N_coh=12" in messages[0]
        assert "1.2 s of the 1 s frame" in messages[0]


class TestEmit:
    def _result(self) -> sweeps.SweepResult:
        spec = _spec()
        points = (
            sweeps.SweepPoint.aggregate([_outcome("feasible", 2.0, delivery_time=0.1, grid_value=2)]),
            sweeps.SweepPoint.aggregate([_outcome("infeasible", grid_index=1, grid_value=4)]),
        )
        return sweeps.SweepResult(spec, points)

    def test_writes_both_formats(self, tmp_path: pathlib.Path):
        written = sweeps.emit(self._result(), tmp_path / "out")

        assert written == [tmp_path / "out" / "test.csv", tmp_path / "out" / "test.json"]
        frame = pd.read_csv(written[0])
        assert frame["n_feasible"].tolist() == [1, 0]
        data = json.loads(written[1].read_text(encoding="utf-8"))
        assert data["spec"]["scenario"] == "test"
        assert data["points"][1]["mean_tput"] is None

    @pytest.mark.parametrize(("output_format", "suffix"), [("csv", ".csv"), ("json", ".json")])
    def test_writes_one_format(self, tmp_path: pathlib.Path, output_format: str, suffix: str):
        written = sweeps.emit(self._result(), tmp_path, output_format)

        assert [path.suffix for path in written] == [suffix]

    def test_rejects_unknown_format(self, tmp_path: pathlib.Path):
        with pytest.raises(errors.ConfigurationError):
            sweeps.emit(self._result(), tmp_path, "xml")

    def test_unwritable_directory(self, tmp_path: pathlib.Path):
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")

        with pytest.raises(errors.OutputError):
            sweeps.emit(self._result(), blocker / "out")


class TestPresets:
    def test_names(self):
        assert sweeps.preset_names() == ["custom", "fig2a", "fig2b", "fig2c"]
        assert sweeps.preset_names(aliases=True) == [
            "coherent-count",
            "custom",
            "delivery-power",
            "energy-budget",
            "fig2a",
            "fig2b",
            "fig2c",
        ]

    @pytest.mark.parametrize(
        ("alias", "name"), [("coherent-count", "fig2a"), ("delivery-power", "fig2b"), ("energy-budget", "fig2c")]
    )
    def test_aliases(self, alias: str, name: str):
        assert sweeps.get_preset(alias) == sweeps.get_preset(name)
        assert sweeps.get_preset(alias).scenario == name

    def test_coherent_count(self):
        spec = sweeps.get_preset("fig2a")

        assert spec.parameter == "N_coh"
        assert spec.grid == (4, 8, 12, 16, 20)
        assert spec.series_labels == ("alpha=2.2", "alpha=2.4")
        assert all(spec.resolve("alpha=2.2", value).system.has_transmission_window for value in spec.grid)

    def test_delivery_power(self):
        spec = sweeps.get_preset("fig2b")

        assert spec.parameter == "p_dbm"
        assert spec.resolve("d_RU=15", 20.0).geometry.user_circle_center == (50.0, -5.0)

    def test_energy_budget(self):
        spec = sweeps.get_preset("fig2c")

        assert spec.baselines == sweeps.BASELINES
        assert spec.resolve(None, 0.6).system.energy_budget == 0.6

    def test_custom_runs_at_the_default_delivery_rate(self):
        spec = sweeps.get_preset("custom")

        assert spec.scenario == "custom"
        assert spec.baselines == ("proposed",)
        assert spec.resolve(None, 8).system.delivery_rate == config_.table_defaults().delivery_rate

    def test_logs_a_delivery_rate_override(self, caplog: pytest.LogCaptureFixture):
        with caplog.at_level("INFO", logger="hybris.sweeps"):
            sweeps.get_preset("fig2a")

        assert "runs at R_F = 25.0 b/s instead of the default 10.0 b/s" in caplog.text

    def test_default_delivery_rate_leaves_no_window_for_large_coherent_counts(self):
        spec = sweeps.get_preset("fig2a")
        overrides = dict(spec.overrides, R_F_bps=10.0)
        windows = [
            spec.replace(overrides=overrides).resolve("alpha=2.2", value).system.has_transmission_window
            for value in spec.grid
        ]

        assert windows == [True, True, False, False, False]

    def test_unknown(self):
        with pytest.raises(errors.ConfigurationError):
            sweeps.get_preset("nope")

    @pytest.mark.parametrize("name", ["fig2a", "coherent-count"])
    def test_duplicate_registration(self, name: str):
        with pytest.raises(ValueError, match="already registered"):
            sweeps.as_preset(name)(lambda: _spec())

    def test_duplicate_alias_registration(self):
        with pytest.raises(ValueError, match="already registered"):
            sweeps.as_preset("fresh", "fig2b")(lambda: _spec())

        assert "fresh" not in sweeps.preset_names()


def _means(
    result: sweeps.SweepResult, baseline: str = "proposed", series: typing.Optional[str] = None
) -> typing.List[float]:
    return [point.mean_tput for point in result.points if point.baseline == baseline and point.series == series]


def _non_increasing(values: typing.Sequence[float], /) -> bool:
    return all(after <= before * (1.0 + 1e-9) for before, after in zip(values, values[1:]))


@pytest.mark.skipif(not os.getenv("HYBRIS_RUN_SLOW"), reason="set HYBRIS_RUN_SLOW to run the reference sweeps")
class TestReferenceTrends:
    def test_coherent_count_peaks_inside_the_grid(self):
        spec = sweeps.get_preset("fig2a")
        spec = spec.replace(realizations=20, series={"alpha=2.2": spec.series["alpha=2.2"]})

        means = _means(sweeps.run_scenario(spec, workers=-1), series="alpha=2.2")

        peak = means.index(max(means))
        assert 0 < peak < len(means) - 1
        assert _non_increasing(means[peak::-1])
        assert _non_increasing(means[peak:])

    def test_throughput_falls_with_the_delivery_power(self):
        spec = sweeps.get_preset("fig2b")
        spec = spec.replace(realizations=20, series={"default": {}})

        means = _means(sweeps.run_scenario(spec, workers=-1), series="default")

        assert len(means) == len(spec.grid)
        assert _non_increasing(means)

    def test_baseline_ordering_across_energy_budgets(self):
        spec = sweeps.get_preset("fig2c").replace(realizations=20)

        result = sweeps.run_scenario(spec, workers=-1)

        proposed = _means(result)
        fully_fixed = _means(result, "fully_fixed")
        fully_coherent = _means(result, "fully_coherent")
        coarser = _means(result, "b_variant")
        for index in range(len(spec.grid)):
            assert proposed[index] >= fully_fixed[index] * (1.0 - 1e-9)
            assert fully_fixed[index] >= fully_coherent[index] * (1.0 - 1e-9)
            assert proposed[index] >= coarser[index] * (1.0 - 1e-9)

        assert _non_increasing(proposed[::-1])
