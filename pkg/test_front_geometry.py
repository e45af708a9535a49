#!/usr/bin/env python3
"""
Tests for spreading speeds, the critical angle and the Wulff shape
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from core_hamiltonians import ModelParams
from front_geometry import (WulffShape, convexity_check, critical_angle, critical_angle_bounds,
                            directional_speed, is_road_enhanced, large_D_asymptote,
                            lower_shape_angle, lower_shape_contains, lower_shape_speed,
                            mu_infinity_asymptote, polar_point, road_speed, road_speed_bounds,
                            sample_wulff)
from value_function import solve_J

DEFAULT = ModelParams()
HEADLINE_SPEED = 3.0662


def test_road_speed_examples():
    assert road_speed(ModelParams(D=1.5)) == pytest.approx(2.0, abs=1e-7)
    assert road_speed(ModelParams(D=2.0)) == pytest.approx(2.0, abs=1e-7)
    assert road_speed(DEFAULT) == pytest.approx(HEADLINE_SPEED, abs=5e-4)


def linear_wave_speed(params):
    """Minimal speed of exponential waves e^{q(ct - x) - py} of the linearized road-field system"""
    p = np.linspace(0.0, 4.0, 400001)
    exchange = params.mu * p / (params.kappa * params.nu + p)
    q = np.sqrt((p * p + 1.0 + exchange) / (params.D - 1.0))
    return float(np.min((q * q + p * p + 1.0) / q))


@pytest.mark.parametrize("params", [DEFAULT, ModelParams(D=4.0), ModelParams(D=9.0, mu=2.0, kappa=0.5),
                                    ModelParams(D=25.0, nu=3.0)])
def test_road_speed_matches_linear_waves(params):
    assert road_speed(params) == pytest.approx(linear_wave_speed(params), abs=1e-6)


@pytest.mark.parametrize("D", [1.2, 1.8, 2.0])
def test_road_speed_is_kpp_speed_for_small_diffusivity(D):
    assert road_speed(ModelParams(D=D)) == pytest.approx(2.0, abs=1e-7)


@pytest.mark.parametrize("D", [2.05, 3.0, 9.0])
def test_road_speed_exceeds_kpp_speed(D):
    assert road_speed(ModelParams(D=D)) > 2.0001


@pytest.mark.parametrize("D", [2.1, 3.0, 5.0, 9.0, 25.0, 100.0])
@pytest.mark.parametrize("mu", [0.1, 1.0, 10.0])
def test_road_speed_bounds(D, mu):
    params = ModelParams(D=D, mu=mu)
    lower, upper = road_speed_bounds(params)
    speed = road_speed(params)
    assert lower - 1e-9 <= speed <= upper + 1e-9


def test_large_diffusivity_scaling():
    asymptote = large_D_asymptote(DEFAULT)
    assert abs(road_speed(DEFAULT.with_diffusivity(1e6)) / 1e3 - asymptote) <= 2e-3
    ratios = [road_speed(DEFAULT.with_diffusivity(D)) / math.sqrt(D) for D in (1e3, 1e5, 1e7)]
    assert abs(ratios[-1] - asymptote) < abs(ratios[0] - asymptote)


def test_large_decay_asymptote():
    assert mu_infinity_asymptote(ModelParams(mu=1e4)) == pytest.approx(0.0215845, rel=1e-4)
    for mu in (1e4, 4e4):
        params = ModelParams(mu=mu)
        assert large_D_asymptote(params) == pytest.approx(mu_infinity_asymptote(params), rel=1e-2)

    # the limit decays like mu^(-1/2)
    ratio = large_D_asymptote(ModelParams(mu=1e4)) / large_D_asymptote(ModelParams(mu=4e4))
    assert ratio == pytest.approx(2.0, rel=2e-2)


def test_directional_speed_examples():
    assert directional_speed(0.0, DEFAULT) == 2.0
    assert directional_speed(math.pi / 2, DEFAULT) == pytest.approx(HEADLINE_SPEED, abs=5e-4)
    diagonal = directional_speed(math.pi / 4, DEFAULT)
    assert 2.0 < diagonal < road_speed(DEFAULT)
    assert directional_speed(-math.pi / 4, DEFAULT) == diagonal
    with pytest.raises(ValueError):
        directional_speed(2.0, DEFAULT)


def test_directional_speed_is_zero_of_value_function():
    speed = directional_speed(math.pi / 3, DEFAULT)
    x, y = polar_point(speed, math.pi / 3)
    assert solve_J(1.0, x, y, DEFAULT).value == pytest.approx(0.0, abs=1e-8)


def test_road_enhancement():
    assert not is_road_enhanced(0.0, DEFAULT)
    assert is_road_enhanced(math.pi / 2, DEFAULT)
    assert not is_road_enhanced(math.pi / 2, ModelParams(D=1.5))


def test_critical_angle_examples():
    assert critical_angle(ModelParams(D=1.7)) == math.pi / 2

    theta_star = critical_angle(DEFAULT)
    lower, upper = critical_angle_bounds(DEFAULT)
    assert lower == pytest.approx(math.asin(7.0 / (16.0 * math.sqrt(8.0))))
    assert lower <= theta_star < upper
    assert theta_star < lower_shape_angle(DEFAULT)
    assert lower_shape_angle(DEFAULT) == pytest.approx(math.asin(2.0 / HEADLINE_SPEED), abs=1e-3)

    big = ModelParams(D=100.0)
    lower, upper = critical_angle_bounds(big)
    assert lower <= critical_angle(big) < upper


def test_speed_is_two_below_critical_angle_and_larger_above():
    theta_star = critical_angle(DEFAULT)
    assert directional_speed(0.9 * theta_star, DEFAULT) == 2.0
    assert directional_speed(theta_star + 0.1, DEFAULT) > 2.0


def test_wulff_quarter_disk_for_small_diffusivity():
    shape = sample_wulff(ModelParams(D=1.5), 32)
    quadrant = shape.quadrant_samples()
    assert len(quadrant) == 32
    assert len(shape.samples) == 63
    assert all(speed == pytest.approx(2.0, abs=1e-9) for _, speed in shape.samples)
    assert shape.convex is True


def test_wulff_shape_at_headline_parameters():
    shape = sample_wulff(DEFAULT, 64)
    assert shape.convex is True
    for theta, speed in shape.quadrant_samples():
        assert speed >= 2.0 - 1e-9
        if theta >= shape.theta_star:
            assert speed <= 2.0 / math.cos(theta - shape.theta_star) + 1e-6
        assert speed >= lower_shape_speed(theta, DEFAULT) - 1e-6


def test_convexity_check_detects_corruption():
    shape = sample_wulff(DEFAULT, 16)
    samples = list(shape.samples)
    k = len(samples) // 2 + 4
    samples[k] = (samples[k][0], 2.0 * samples[k][1])
    corrupted = replace(shape, samples=tuple(samples), convex=None)
    assert convexity_check(corrupted) is False


def test_sample_counts_enforced():
    with pytest.raises(ValueError):
        sample_wulff(DEFAULT, 4)
    small = sample_wulff(ModelParams(D=1.5), 8)
    assert small.convex is None
    with pytest.raises(ValueError):
        convexity_check(small)
    assert isinstance(small, WulffShape)


def test_lower_shape_examples():
    rs = road_speed(DEFAULT)
    underline = lower_shape_angle(DEFAULT)
    assert lower_shape_speed(0.0, DEFAULT) == 2.0
    assert lower_shape_speed(math.pi / 2, DEFAULT) == pytest.approx(rs, rel=1e-9)
    assert lower_shape_speed(underline + 0.1, DEFAULT) == pytest.approx(2.0 / math.cos(0.1))
    assert lower_shape_contains(0.0, 1.9, DEFAULT)
    assert lower_shape_contains(rs - 0.01, 0.0, DEFAULT)
    assert not lower_shape_contains(0.0, 2.1, DEFAULT)


def test_polar_point():
    assert polar_point(2.0, 0.0) == pytest.approx((0.0, 2.0))
    assert polar_point(3.0, math.pi / 2) == (3.0, 0.0)
