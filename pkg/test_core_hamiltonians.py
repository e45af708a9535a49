#!/usr/bin/env python3
"""
Tests for the field, boundary, effective road and flux-limited Hamiltonians
"""

import math

import numpy as np
import pytest
from scipy.optimize import bisect

from core_hamiltonians import (F0_INFINITY, ModelParams, eval_F, eval_F0, eval_Hf,
                               eval_Hf_minus, eval_Hr, eval_Hr_array, eval_Hr_prime,
                               eval_g, eval_g_prime, road_hamiltonian, solve_pq)

DEFAULT = ModelParams()
D2 = ModelParams(D=2.0)


def test_model_params_defaults_and_validation():
    assert (DEFAULT.D, DEFAULT.mu, DEFAULT.nu, DEFAULT.kappa) == (9.0, 1.0, 1.0, 1.0)
    assert DEFAULT.D_tilde is None
    for bad in ({"D": 1.0}, {"D": 0.5}, {"mu": 0.0}, {"nu": -1.0}, {"kappa": 0.0},
                {"D": float("nan")}, {"D_tilde": 4.0}, {"D": 1e300}, {"mu": 1e13}, {"D_tilde": 1e13}):
        with pytest.raises(ValueError):
            ModelParams(**bad)
    assert ModelParams(D_tilde=9.0).D_tilde == 9.0


def test_model_params_are_hashable_and_replaceable():
    assert hash(ModelParams()) == hash(ModelParams())
    single = ModelParams(D=4.0, D_tilde=16.0).with_diffusivity(16.0)
    assert single.D == 16.0 and single.D_tilde is None
    assert DEFAULT.road_equilibrium == 1.0


def test_field_hamiltonian_examples():
    assert eval_Hf(0, 0) == 1.0
    assert eval_Hf(1, 1) == 3.0
    assert eval_Hf(0.3, -0.4) == pytest.approx(1.25)


def test_boundary_hamiltonian_examples():
    assert eval_F0(0.0, 0.0, DEFAULT) == 0.0
    assert eval_F0(1.0, 1.0, D2) == pytest.approx(1.5)
    value = eval_F0(1.0, -1.0, DEFAULT)
    assert value is F0_INFINITY
    assert math.isinf(value)
    assert eval_F0(1.0, -2.0, DEFAULT) is F0_INFINITY


def test_monotone_part_examples():
    assert eval_Hf_minus(0, -5) == 1.0
    assert eval_Hf_minus(1, 2) == 6.0
    assert eval_Hf_minus(2, -1) == 5.0


def test_g_examples():
    assert eval_g(0.0, D2) == pytest.approx(1.0)
    assert eval_g(1.0, D2) == pytest.approx(math.sqrt(2.5))
    assert eval_g(0.0, ModelParams(D=5.0)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        eval_g(-0.1, D2)


def test_g_prime_matches_finite_difference():
    for p in (0.0, 0.3, 1.0, 5.0):
        step = 1e-6
        numeric = (eval_g(p + step, DEFAULT) - eval_g(max(p - step, 0.0), DEFAULT)) / (p + step - max(p - step, 0.0))
        assert eval_g_prime(p, DEFAULT) == pytest.approx(numeric, rel=1e-4)


def test_critical_momentum_examples():
    assert solve_pq(0.5, D2) == 0.0
    assert solve_pq(math.sqrt(2.5), D2) == pytest.approx(1.0, abs=1e-10)

    oracle = bisect(lambda p: eval_g(p, DEFAULT) - 1.2, 0.0, 100.0, xtol=1e-14)
    assert solve_pq(1.2, DEFAULT) == pytest.approx(oracle, abs=1e-11)
    assert solve_pq(-1.2, DEFAULT) == solve_pq(1.2, DEFAULT)


def test_critical_momentum_for_huge_momenta():
    slope = math.sqrt(DEFAULT.D - 1.0)
    for q in (1e6, 1e40, 1e60, 1e99, 1e101, 1e200, 1e300):
        p = solve_pq(q, DEFAULT)
        assert math.isfinite(p)
        assert p == pytest.approx(slope * q, rel=1e-12)
    assert eval_g(solve_pq(1e40, DEFAULT), DEFAULT) == pytest.approx(1e40, rel=1e-12)


def test_road_hamiltonian_examples():
    assert eval_Hr(1.0, D2) == pytest.approx(2.0)
    for params in (D2, DEFAULT, ModelParams(D=100.0, mu=3.0)):
        assert eval_Hr(0.0, params) == 1.0
        q_crit = 1.0 / math.sqrt(params.D - 1.0)
        expected = 1.0 / (params.D - 1.0) + 1.0
        assert eval_Hr(q_crit, params) == pytest.approx(expected, rel=1e-12)
        assert eval_Hr(q_crit * (1 + 1e-9), params) == pytest.approx(expected, rel=1e-7)


def test_road_hamiltonian_agrees_with_field_and_boundary():
    for q in (0.5, 1.0, 2.0, 5.0):
        p = solve_pq(q, DEFAULT)
        H = eval_Hr(q, DEFAULT)
        assert H == pytest.approx(eval_Hf(q, p), abs=1e-9)
        assert H == pytest.approx(eval_F0(q, p, DEFAULT), abs=1e-9)


def test_road_hamiltonian_even_convex_and_differentiable():
    qs = np.linspace(-3.0, 3.0, 121)
    values = np.array([eval_Hr(q, DEFAULT) for q in qs])
    assert np.allclose(values, values[::-1], atol=1e-12)
    assert np.min(values[:-2] - 2.0 * values[1:-1] + values[2:]) > -1e-9

    for q in (-2.0, -0.2, 0.1, 0.4, 1.5, 3.0):
        step = 1e-6
        numeric = (eval_Hr(q + step, DEFAULT) - eval_Hr(q - step, DEFAULT)) / (2 * step)
        assert eval_Hr_prime(q, DEFAULT) == pytest.approx(numeric, abs=1e-5)


def test_branch_parametrization_traces_the_graph():
    ham = road_hamiltonian(DEFAULT)
    for s in (0.0, 0.2, ham.q_crit, 0.5, 1.0, 3.0):
        q, p, H, H_prime = ham.branch_point(s)
        assert eval_Hr(q, DEFAULT) == pytest.approx(H, rel=1e-10)
        assert eval_Hr_prime(q, DEFAULT) == pytest.approx(H_prime, rel=1e-8)
        assert ham.branch_parameter(q) == pytest.approx(s, abs=1e-10)

    s = np.linspace(0.0, 3.0, 50)
    q, p, H, H_prime = ham.branch_arrays(s)
    for k in (0, 7, 30, 49):
        assert (q[k], p[k], H[k], H_prime[k]) == pytest.approx(ham.branch_point(s[k]), rel=1e-12)
    assert np.all(np.diff(H_prime) > 0)


def test_array_evaluation_matches_scalar():
    qs = np.array([-2.0, -0.1, 0.0, 0.3, 0.8, 4.0])
    expected = [eval_Hr(q, DEFAULT) for q in qs]
    assert eval_Hr_array(qs, DEFAULT) == pytest.approx(expected, rel=1e-10)


def test_flux_limited_hamiltonian():
    assert eval_F(0.0, 0.0, DEFAULT) == 1.0
    q_crit = 1.0 / math.sqrt(DEFAULT.D - 1.0)
    assert eval_F(0.9 * q_crit, 0.0, DEFAULT) == pytest.approx(eval_Hf(0.9 * q_crit, 0.0))
    assert eval_Hf_minus(2.0, -3.0) == 5.0
    assert eval_F(2.0, -3.0, DEFAULT) == pytest.approx(eval_Hr(2.0, DEFAULT))
    assert eval_F(0.0, 3.0, DEFAULT) == 10.0
