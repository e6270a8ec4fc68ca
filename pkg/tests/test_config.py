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

import json
import math
import pathlib

import pytest

from hybris import channels
from hybris import config as config_
from hybris import errors


@pytest.mark.parametrize(("dbm", "watts"), [(30.0, 1.0), (20.0, 0.1), (0.0, 1e-3), (-80.0, 1e-11)])
def test_power_conversions(dbm: float, watts: float):
    assert config_.dbm_to_watts(dbm) == pytest.approx(watts, rel=1e-12)
    assert config_.watts_to_dbm(watts) == pytest.approx(dbm, abs=1e-9)


def test_watts_to_dbm_rejects_non_positive_power():
    with pytest.raises(errors.DomainError):
        config_.watts_to_dbm(0.0)


def test_table_defaults():
    config = config_.table_defaults()

    assert (config.antennas, config.users, config.n_coherent, config.n_fixed) == (8, 4, 8, 4)
    assert config.delivery_power == pytest.approx(0.1)
    assert config.noise_powers == pytest.approx((1e-11,) * 4)
    assert config.min_delivery_time == pytest.approx(0.8)


class TestSolverOptions:
    @pytest.mark.parametrize(
        "changes",
        [
            {"max_outer_iters": 0},
            {"init_retries": 0},
            {"seed": -1},
            {"rel_tol": 0.0},
            {"rel_tol": 1.0},
            {"conic_tol": 0.0},
            {"rank_penalty": -1.0},
            {"rank_penalty_growth": 0.5},
            {"rank_tol": 0.0},
            {"rank_rounds": -1},
        ],
    )
    def test_rejects_invalid_options(self, changes):
        with pytest.raises(errors.ConfigurationError):
            config_.SolverOptions(**changes)

    def test_solver_chain_drops_duplicates(self):
        options = config_.SolverOptions(solver="scs", fallback_solvers=("clarabel", "SCS"))

        assert options.solver_chain == ("SCS", "CLARABEL")

    def test_from_mapping(self):
        options = config_.SolverOptions.from_mapping({"max_outer_iters": 7, "fallback_solvers": ["SCS", "ECOS"]})

        assert options.max_outer_iters == 7
        assert options.fallback_solvers == ("SCS", "ECOS")
        assert config_.SolverOptions.from_mapping(options.to_dict()) == options

    def test_from_mapping_rejects_unknown_keys(self):
        with pytest.raises(errors.ConfigurationError):
            config_.SolverOptions.from_mapping({"iterations": 3})


class TestResolvedConfig:
    def test_defaults(self):
        resolved = config_.ResolvedConfig.from_mapping({})

        assert resolved.system == config_.table_defaults()
        assert resolved.geometry == channels.Geometry()
        assert resolved.fading == channels.FadingParams()
        assert resolved.seed == 0

    def test_unit_suffixed_keys(self):
        resolved = config_.ResolvedConfig.from_mapping(
            {
                "M": 4,
                "K": 2,
                "N_coh": 6,
                "p_dbm": 30.0,
                "delta2_watts": [1e-10, 2e-10],
                "R_min_bits": 0.5,
                "alpha_ru": 2.4,
                "ris_user_distance_m": 15.0,
                "solver": {"max_outer_iters": 5},
                "seed": 3,
                "realization": 2,
            }
        )

        assert (resolved.system.antennas, resolved.system.users, resolved.system.n_coherent) == (4, 2, 6)
        assert resolved.system.delivery_power == pytest.approx(1.0)
        assert resolved.system.noise_powers == (1e-10, 2e-10)
        assert resolved.system.min_rates == (0.5, 0.5)
        assert resolved.fading.alpha_ru == 2.4
        assert resolved.geometry.user_circle_center == (50.0, -5.0)
        assert resolved.solver.max_outer_iters == 5
        assert (resolved.seed, resolved.realization) == (3, 2)

    def test_dbm_lists(self):
        resolved = config_.ResolvedConfig.from_mapping({"K": 2, "delta2_dbm": [-80.0, -70.0]})

        assert resolved.system.noise_powers == pytest.approx((1e-11, 1e-10))

    @pytest.mark.parametrize(
        "mapping",
        [
            {"antennas": 4},
            {"p_dbm": 20.0, "p_watts": 0.1},
            {"K": 0},
            {"E_max_joules": -1.0},
            {"R_min_bits": [1.0, 1.0]},
            {"solver": {"unknown": 1}},
            {"user_radius_m": -1.0},
        ],
    )
    def test_rejects_invalid_mappings(self, mapping):
        with pytest.raises(errors.ConfigurationError):
            config_.ResolvedConfig.from_mapping(mapping)

    def test_to_mapping_resolves_back(self):
        resolved = config_.ResolvedConfig.from_mapping({"M": 4, "K": 2, "seed": 9, "ris_user_distance_m": 20.0})

        again = config_.ResolvedConfig.from_mapping(json.loads(json.dumps(resolved.to_mapping())))

        assert again == resolved


class TestLoadJson:
    def test_reads_an_object(self, tmp_path: pathlib.Path):
        path = tmp_path / "config.json"
        path.write_text('{"M": 4}', encoding="utf-8")

        assert config_.load_json(path) == {"M": 4}

    @pytest.mark.parametrize("text", ["[1, 2]", "{not json"])
    def test_rejects_bad_content(self, tmp_path: pathlib.Path, text: str):
        path = tmp_path / "config.json"
        path.write_text(text, encoding="utf-8")

        with pytest.raises(errors.ConfigurationError):
            config_.load_json(path)

    def test_missing_file(self, tmp_path: pathlib.Path):
        with pytest.raises(errors.ConfigurationError):
            config_.load_json(tmp_path / "missing.json")


class TestAnalysisConfig:
    def test_defaults(self):
        request = config_.AnalysisConfig.from_mapping({})
        geometry = channels.Geometry()
        expected = channels.path_loss(geometry.bs_ris_distance, 2.2, -30.0) * channels.path_loss(10.0, 2.2, -30.0)

        assert request.n_coherent == 8.0
        assert request.magnitudes is None
        assert request.scenario.transmit_power == pytest.approx(config_.dbm_to_watts(27.0))
        assert request.scenario.channel_constant == pytest.approx(expected)
        assert request.scenario.snr_scale == pytest.approx(config_.dbm_to_watts(27.0) / 1e-11)

    def test_direct_constants(self):
        request = config_.AnalysisConfig.from_mapping({"C": 1e-6, "p_bar": 1e12, "N_coh": None})

        assert request.scenario.channel_constant == 1e-6
        assert request.scenario.snr_scale == 1e12
        assert request.n_coherent is None

    def test_magnitudes(self):
        request = config_.AnalysisConfig.from_mapping(
            {"h_r_magnitudes": [1.0, 2.0], "h_magnitudes": [1.0, 1.0], "delta2_watts": 0.5, "p_t_watts": 1.0}
        )

        assert request.magnitudes == ((1.0, 2.0), (1.0, 1.0))
        assert request.scenario.channel_constant == pytest.approx(1.0)
        assert request.scenario.snr_scale == pytest.approx(2.0)

    @pytest.mark.parametrize(
        "mapping",
        [
            {"M": 4},
            {"C": 1.0, "h_magnitudes": [1.0]},
            {"p_t_dbm": 27.0, "p_t_watts": 0.5},
            {"p_t_watts": 0.05},
            {"h_r_magnitudes": [1.0, 2.0], "h_magnitudes": [1.0]},
        ],
    )
    def test_rejects_invalid_mappings(self, mapping):
        with pytest.raises(errors.ConfigurationError):
            config_.AnalysisConfig.from_mapping(mapping)


def test_default_geometry_distance():
    assert config_.default_geometry().bs_ris_distance == pytest.approx(math.hypot(50.0, 10.0))
