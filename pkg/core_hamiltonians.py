"""
core_hamiltonians.py - Hamiltonians of the road-field model

Field Hamiltonian H_f, the boundary Hamiltonian F0 with its exchange term,
the monotone part H_f^-, the effective road Hamiltonian H_r obtained through
the critical momentum p_q = g^{-1}(|q|), and the flux-limited Hamiltonian
F = max{H_f^-, H_r}.

All parameters are the scaled ones: field diffusivity and growth rate are
normalized to 1, D is the road diffusivity, mu the road decay rate, nu the
field-to-road exchange rate and kappa the boundary exchange coefficient.
"""

import math
import logging
from dataclasses import dataclass, asdict, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import bisect

PQ_TOLERANCE = 1e-12
PQ_ASYMPTOTIC_Q = 1e100
ARRAY_BISECTION_STEPS = 80
PARAMETER_LIMIT = 1e12


class _PositiveInfinity(float):
    """The +inf taken by F0 below the exchange singularity, distinct from overflow"""

    def __new__(cls):
        return super().__new__(cls, "inf")

    def __repr__(self):
        return "F0_INFINITY"


F0_INFINITY = _PositiveInfinity()


# === Parameters ===
@dataclass(frozen=True)
class ModelParams:
    """Scaled model parameters; D_tilde is the diffusivity of a second road"""
    D: float = 9.0
    mu: float = 1.0
    nu: float = 1.0
    kappa: float = 1.0
    D_tilde: float = None

    def __post_init__(self):
        for name in ("D", "mu", "nu", "kappa"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ValueError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            if value > PARAMETER_LIMIT:
                raise ValueError(f"{name} must not exceed {PARAMETER_LIMIT:g}, got {value}")
            object.__setattr__(self, name, value)

        if self.D <= 1.0:
            raise ValueError(f"D must exceed 1, got {self.D}")
        for name in ("mu", "nu", "kappa"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")

        if self.D_tilde is not None:
            D_tilde = float(self.D_tilde)
            if not math.isfinite(D_tilde) or not self.D <= D_tilde <= PARAMETER_LIMIT:
                raise ValueError(f"D_tilde must lie in [D={self.D}, {PARAMETER_LIMIT:g}], got {self.D_tilde}")
            object.__setattr__(self, "D_tilde", D_tilde)

    @property
    def road_equilibrium(self):
        """Road density at the invaded state, nu/mu"""
        return self.nu / self.mu

    def with_diffusivity(self, D):
        """Same exchange parameters, single road with diffusivity D"""
        return replace(self, D=D, D_tilde=None)

    def as_dict(self):
        return asdict(self)


# === Field and Boundary Hamiltonians ===
def eval_Hf(q, p):
    """Field Hamiltonian q^2 + p^2 + 1"""
    return q * q + p * p + 1.0


def eval_F0(q, p, params):
    """
    Boundary Hamiltonian D q^2 + B0(p)

    Args:
        q: Tangential momentum
        p: Normal momentum
        params: ModelParams

    Returns:
        float: D q^2 - mu p / (kappa nu + p) when p > -kappa nu,
        otherwise the F0_INFINITY sentinel
    """
    kn = params.kappa * params.nu
    if p <= -kn:
        return F0_INFINITY
    return params.D * q * q - params.mu * p / (kn + p)


def eval_Hf_minus(q, p):
    """Nonincreasing-in-p part of H_f: (p+)^2 + q^2 + 1"""
    p_plus = max(p, 0.0)
    return p_plus * p_plus + q * q + 1.0


def eval_g(p, params):
    """Increasing function g(p) whose inverse gives the critical momentum"""
    if p < 0:
        raise ValueError(f"g is defined for p >= 0, got {p}")
    kn = params.kappa * params.nu
    return math.sqrt((p * p + 1.0 + params.mu * p / (kn + p)) / (params.D - 1.0))


def eval_g_prime(p, params):
    """Derivative of g on p >= 0"""
    if p < 0:
        raise ValueError(f"g is defined for p >= 0, got {p}")
    kn = params.kappa * params.nu
    numerator = 2.0 * p + params.mu * kn / ((kn + p) ** 2)
    return numerator / (2.0 * (params.D - 1.0) * eval_g(p, params))


# === Effective Road Hamiltonian ===
@dataclass(frozen=True)
class EffectiveRoadHamiltonian:
    """
    Evaluator for H_r(q) = q^2 + p_q^2 + 1 and its derivative

    p_q vanishes for |q| <= q_crit = 1/sqrt(D-1) and is the root of
    g(p) = |q| beyond. Negative momenta are handled by evenness.
    """
    params: ModelParams
    pq_solver_tolerance: float = PQ_TOLERANCE

    @property
    def q_crit(self):
        return 1.0 / math.sqrt(self.params.D - 1.0)

    def g(self, p):
        return eval_g(p, self.params)

    def g_prime(self, p):
        return eval_g_prime(p, self.params)

    def solve_pq(self, q):
        """
        Critical momentum p_q by bisection and one Newton polish

        g(p) >= p/sqrt(D-1) brackets the root below sqrt(D-1)|q| + 1. Past
        PQ_ASYMPTOTIC_Q the leading terms sqrt(D-1)|q| - (1 + mu)/(2 sqrt(D-1)|q|)
        are exact to double precision and squaring |q| would overflow.
        """
        aq = abs(q)
        if aq <= self.q_crit:
            return 0.0
        slope = math.sqrt(self.params.D - 1.0)
        if aq > PQ_ASYMPTOTIC_Q:
            return slope * aq - (1.0 + self.params.mu) / (2.0 * slope * aq)

        def residual(p):
            return self.g(p) - aq

        upper = slope * aq + 1.0
        root = bisect(residual, 0.0, upper, xtol=self.pq_solver_tolerance)

        polished = root - residual(root) / self.g_prime(root)
        if 0.0 < polished <= upper and abs(residual(polished)) <= abs(residual(root)):
            root = polished
        return root

    def value(self, q):
        p = self.solve_pq(q)
        return q * q + p * p + 1.0

    def derivative(self, q):
        aq = abs(q)
        if aq <= self.q_crit:
            return 2.0 * q
        p = self.solve_pq(aq)
        return math.copysign(2.0 * aq + 2.0 * p / self.g_prime(p), q)

    # --- explicit parametrization of the graph of H_r ---
    def branch_point(self, s):
        """
        Point of the graph of H_r at branch parameter s >= 0

        s <= q_crit is the quadratic branch (q = s, p = 0); beyond it
        p = s - q_crit and q = g(p). Returns (q, p, H_r(q), H_r'(q))
        without any root finding. q, H_r and H_r' all increase with s.
        """
        q_crit = self.q_crit
        if s <= q_crit:
            return s, 0.0, s * s + 1.0, 2.0 * s
        p = s - q_crit
        q = self.g(p)
        return q, p, q * q + p * p + 1.0, 2.0 * q + 2.0 * p / self.g_prime(p)

    def branch_parameter(self, q):
        """Inverse of branch_point's q-coordinate"""
        aq = abs(q)
        if aq <= self.q_crit:
            return aq
        return self.q_crit + self.solve_pq(aq)

    def branch_arrays(self, s):
        """Vectorized branch_point over an array of s >= 0"""
        s = np.asarray(s, dtype=float)
        params = self.params
        kn = params.kappa * params.nu
        q_crit = self.q_crit

        p = np.maximum(s - q_crit, 0.0)
        g = np.sqrt((p * p + 1.0 + params.mu * p / (kn + p)) / (params.D - 1.0))
        g_prime = (2.0 * p + params.mu * kn / (kn + p) ** 2) / (2.0 * (params.D - 1.0) * g)

        on_field_branch = s > q_crit
        q = np.where(on_field_branch, g, s)
        H = q * q + p * p + 1.0
        H_prime = np.where(on_field_branch, 2.0 * q + 2.0 * p / g_prime, 2.0 * s)
        return q, p, H, H_prime

    def value_array(self, q):
        """Vectorized H_r by fixed-count array bisection, for grid oracles"""
        aq = np.abs(np.asarray(q, dtype=float))
        params = self.params
        kn = params.kappa * params.nu

        # g(p) >= p / sqrt(D-1) bounds the root
        lower = np.zeros_like(aq)
        upper = math.sqrt(params.D - 1.0) * aq + 1.0
        for _ in range(ARRAY_BISECTION_STEPS):
            middle = 0.5 * (lower + upper)
            g = np.sqrt((middle * middle + 1.0 + params.mu * middle / (kn + middle)) / (params.D - 1.0))
            below = g < aq
            lower = np.where(below, middle, lower)
            upper = np.where(below, upper, middle)

        p = np.where(aq > self.q_crit, 0.5 * (lower + upper), 0.0)
        return aq * aq + p * p + 1.0


@lru_cache(maxsize=256)
def road_hamiltonian(params, pq_solver_tolerance=PQ_TOLERANCE):
    """Shared evaluator per parameter set"""
    if params.D <= 2.0:
        logging.debug(f"D={params.D} <= 2: H_r is quadratic on |q| <= {1.0 / math.sqrt(params.D - 1.0):.6g}")
    return EffectiveRoadHamiltonian(params, pq_solver_tolerance)


# === Module-Level Operations ===
def solve_pq(q, params):
    return road_hamiltonian(params).solve_pq(q)


def eval_Hr(q, params):
    return road_hamiltonian(params).value(q)


def eval_Hr_prime(q, params):
    return road_hamiltonian(params).derivative(q)


def eval_Hr_array(q, params):
    return road_hamiltonian(params).value_array(q)


def eval_F(q, p, params):
    """Flux-limited Hamiltonian max{H_f^-(q, p), H_r(q)}"""
    return max(eval_Hf_minus(q, p), eval_Hr(q, params))
