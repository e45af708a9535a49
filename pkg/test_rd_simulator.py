#!/usr/bin/env python3
"""
Tests for the explicit road-field simulator and front-speed estimation

Full-size runs are slow; set RF_SLOW_TESTS=1 to include them.
"""

import math
import os
from dataclasses import replace

import numpy as np
import pytest

from core_hamiltonians import ModelParams
from rd_simulator import (SimulationConfig, cross_validate, estimate_speed, extract_front,
                          init_state, run_simulation, stable_time_step, step)
from utils import BoundaryProximityError

DEFAULT = ModelParams()
SMALL = {"Lx": 10.0, "Ly": 10.0, "h": 0.5, "r0": 1.0}

slow = pytest.mark.skipif(os.environ.get("RF_SLOW_TESTS") != "1",
                          reason="set RF_SLOW_TESTS=1 for full simulations")


def small_state(params=DEFAULT, **overrides):
    kwargs = dict(SMALL, **overrides)
    return init_state(params, kwargs["Lx"], kwargs["Ly"], kwargs["h"], kwargs["r0"],
                      cone_a=kwargs.get("cone_a"))


def test_stable_time_step():
    h = 0.2
    expected = 0.9 * min(h * h / 36.0, 1.0 / (4.0 / (h * h) + 2.0 / h + 1.0))
    assert stable_time_step(DEFAULT, h) == pytest.approx(expected)
    assert stable_time_step(ModelParams(D=4.0, D_tilde=16.0), h) == pytest.approx(0.9 * h * h / 64.0)


def test_initial_data():
    state = init_state(DEFAULT, 10.0, 10.0, 0.1, 1.0)
    assert state.field_value(0.5, 0.5) == 1.0
    assert state.field_value(3.0, 0.0) == 0.0
    assert state.road_value(0.0) == DEFAULT.road_equilibrium
    assert state.road_value(5.0) == 0.0
    assert state.V.shape == (201, 101)
    assert state.t == 0.0


def test_initial_data_validation():
    with pytest.raises(ValueError):
        init_state(DEFAULT, 10.0, 10.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        init_state(DEFAULT, 10.0, 10.0, 0.6, 1.0)
    with pytest.raises(ValueError):
        init_state(DEFAULT, 5.0, 10.0, 0.1, 1.0)


def test_equilibrium_and_zero_states_are_fixed_points():
    state = small_state()
    invaded = replace(state, V=np.ones_like(state.V),
                      U=np.full_like(state.U, DEFAULT.road_equilibrium))
    after = step(invaded, guard_cells=0)
    assert np.allclose(after.V, 1.0, atol=1e-14)
    assert np.allclose(after.U, DEFAULT.road_equilibrium, atol=1e-14)
    assert after.t == pytest.approx(state.dt)

    empty = replace(state, V=np.zeros_like(state.V), U=np.zeros_like(state.U))
    after = step(empty)
    assert not after.V.any()
    assert not after.U.any()


def test_step_preserves_bounds():
    state = small_state()
    for _ in range(20):
        state = step(state)
    assert state.V.min() >= -1e-12 and state.V.max() <= 1.0 + 1e-12
    assert state.U.min() >= -1e-12 and state.U.max() <= DEFAULT.road_equilibrium + 1e-12


def test_front_extraction_at_start():
    state = init_state(DEFAULT, 10.0, 10.0, 0.1, 1.0)
    assert extract_front(state, 0.0) == pytest.approx(1.0, abs=state.h)
    assert extract_front(state, math.pi / 4) == pytest.approx(1.0, abs=state.h)
    assert extract_front(state, math.pi / 2) == pytest.approx(1.0, abs=state.h)
    assert extract_front(state, -math.pi / 2) == pytest.approx(1.0, abs=state.h)

    empty = replace(state, V=np.zeros_like(state.V), U=np.zeros_like(state.U))
    assert extract_front(empty, 0.0) is None
    assert extract_front(empty, math.pi / 2) is None


def test_estimate_speed_on_synthetic_histories():
    times = np.linspace(0.0, 20.0, 41)
    linear = [(t, 0.0, 2.0 * t) for t in times]
    fit = estimate_speed(linear, 0.0)
    assert fit.speed == pytest.approx(2.0, rel=1e-12)
    assert fit.residual == pytest.approx(0.0, abs=1e-9)
    assert fit.points == 21

    with_correction = [(t, 1.0, 3.0 * t + math.sqrt(t)) for t in times] + [(0.5, 1.0, None)]
    assert estimate_speed(with_correction, 1.0).speed == pytest.approx(3.0, abs=0.2)

    short = [(t, 0.0, 2.0 * t) for t in range(5)]
    with pytest.raises(ValueError):
        estimate_speed(short, 0.0)
    with pytest.raises(ValueError):
        estimate_speed(linear, 0.7)


def short_run(**overrides):
    # r0 = 4 lies well above the radius where the initial bump would first decay
    settings = dict(h=0.5, Lx=40.0, Ly=40.0, t_max=4.0, r0=4.0, record_interval=0.1)
    settings.update(overrides)
    return run_simulation(DEFAULT, SimulationConfig(**settings), (0.0, math.pi / 2))


def test_short_run_records_history_and_respects_bounds():
    result = short_run()
    config = result.config
    assert result.maximum_principle_holds
    assert result.steps == math.ceil(config.t_max / result.final_state.dt)
    assert len(result.history) >= 2 * 40
    assert all(radius is not None for _, _, radius in result.history)

    road = [r for _, theta, r in result.history if theta == math.pi / 2]
    assert road[-1] > road[0]

    rows = cross_validate(result)
    assert [row["theta"] for row in rows] == [0.0, math.pi / 2]
    assert rows[0]["predicted"] == 2.0
    assert rows[1]["predicted"] == pytest.approx(3.0662, abs=5e-4)
    assert all(row["simulated"] > 0.0 for row in rows)


def test_fronts_are_monotone_in_time():
    result = short_run()
    for theta in result.thetas:
        radii = [r for _, angle, r in result.history if angle == theta]
        for earlier, later in zip(radii, radii[1:]):
            assert later >= earlier - result.final_state.h


def test_decoupled_road_predicts_kpp_speed():
    result = short_run(decouple_road=True)
    rows = cross_validate(result)
    assert [row["predicted"] for row in rows] == [2.0, 2.0]
    assert all(row["simulated"] > 0.0 for row in rows)


def test_guard_stops_runs_reaching_the_boundary():
    config = SimulationConfig(h=0.5, Lx=10.0, Ly=10.0, t_max=10.0)
    with pytest.raises(BoundaryProximityError):
        run_simulation(DEFAULT, config, (math.pi / 2,))


def test_cone_mode_initial_data_and_step():
    state = small_state(cone_a=math.pi / 4)
    stencil = state.stencil
    assert stencil.inside[state.node_index(1.0, 1.0)]
    assert not stencil.inside[state.node_index(-1.0, 1.0)]
    assert state.field_value(-0.5, 0.5) == 0.0
    assert state.road_value(-0.5) == 0.0
    assert state.road_value(0.5) == DEFAULT.road_equilibrium
    assert len(state.U_tilde) == 21
    assert list(state.U_tilde[:4]) == [1.0, 1.0, 1.0, 0.0]

    for _ in range(10):
        state = step(state)
    assert not state.V[~stencil.inside].any()
    assert state.V.min() >= -1e-12 and state.V.max() <= 1.0 + 1e-12
    assert state.U_tilde.min() >= -1e-12 and state.U_tilde.max() <= 1.0 + 1e-12

    # the second road is the y-axis here
    assert extract_front(state, 0.0) == pytest.approx(1.0, abs=2 * state.h)


@slow
@pytest.mark.parametrize("D", [9.0, 1.5])
def test_simulated_speeds_match_predictions(D):
    # default configuration: h = 0.2 on [-160, 160] x [0, 100] up to t = 40
    config = SimulationConfig()
    result = run_simulation(ModelParams(D=D), config, (0.0, math.pi / 2))
    assert result.maximum_principle_holds
    for row in cross_validate(result):
        assert row["relative_error"] <= 0.10


@slow
def test_speed_estimates_converge_under_grid_refinement():
    speeds = []
    for h in (0.4, 0.2):
        config = SimulationConfig(h=h, Lx=80.0, Ly=50.0, t_max=20.0)
        result = run_simulation(DEFAULT, config, (0.0, math.pi / 2))
        speeds.append([row["simulated"] for row in cross_validate(result)])
    for coarse, fine in zip(*speeds):
        assert abs(coarse - fine) / fine < 0.03


@slow
def test_decoupled_field_spreads_isotropically():
    config = SimulationConfig(h=0.25, Lx=60.0, Ly=60.0, t_max=25.0, decouple_road=True)
    result = run_simulation(DEFAULT, config, (0.0, math.pi / 4))
    normal, diagonal = (row["simulated"] for row in cross_validate(result))
    assert abs(normal - diagonal) / normal < 0.05
    assert normal == pytest.approx(2.0, rel=0.10)
    assert diagonal == pytest.approx(2.0, rel=0.10)
