"""
legendre.py - Field and road Lagrangians as convex conjugates

L_f(v) = |v|^2/4 - 1 is the conjugate of H_f. The road Lagrangian
L_r(v) = sup_q (v q - H_r(q)) is computed from the first-order condition
H_r'(q) = v, which has a unique root because H_r is strictly convex and
coercive. Inside the quadratic window |v| <= 2/sqrt(D-1) the conjugate is
v^2/4 - 1 exactly.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from core_hamiltonians import EffectiveRoadHamiltonian, road_hamiltonian

CONJUGATE_TOLERANCE = 1e-13
ARRAY_BISECTION_STEPS = 100


def eval_Lf(v1, v2):
    """Field Lagrangian |v|^2/4 - 1"""
    return (v1 * v1 + v2 * v2) / 4.0 - 1.0


@dataclass(frozen=True)
class RoadLagrangian:
    """Conjugate of an EffectiveRoadHamiltonian"""
    hamiltonian: EffectiveRoadHamiltonian
    conjugate_tolerance: float = CONJUGATE_TOLERANCE

    @property
    def window_edge(self):
        """Half-width of the quadratic window, 2/sqrt(D-1)"""
        return 2.0 * self.hamiltonian.q_crit

    def conjugate(self, v):
        """
        Evaluate the conjugate at velocity v

        Args:
            v: Road velocity

        Returns:
            tuple: (q_star, L_r(v)) where q_star is the maximizing momentum,
            H_r'(q_star) = v
        """
        av = abs(v)
        if av <= self.window_edge:
            return v / 2.0, av * av / 4.0 - 1.0

        s = self._branch_root(av)
        q, _, H, _ = self.hamiltonian.branch_point(s)
        return math.copysign(q, v), av * q - H

    def _branch_root(self, av):
        ham = self.hamiltonian

        def slope_gap(s):
            return ham.branch_point(s)[3] - av

        # q(s) >= (s - q_crit)/sqrt(D-1) and H_r' >= 2q bound the root
        lower = ham.q_crit
        upper = lower + math.sqrt(ham.params.D - 1.0) * av / 2.0 + 1.0
        return brentq(slope_gap, lower, upper, xtol=self.conjugate_tolerance)

    def conjugate_array(self, v):
        """Vectorized conjugate by fixed-count bisection on the branch parameter"""
        av = np.abs(np.asarray(v, dtype=float))
        ham = self.hamiltonian
        q_crit = ham.q_crit

        # q(s) >= (s - q_crit)/sqrt(D-1) and H_r' >= 2q bound the root
        lower = np.full_like(av, q_crit)
        upper = q_crit + math.sqrt(ham.params.D - 1.0) * av / 2.0 + 1.0
        for _ in range(ARRAY_BISECTION_STEPS):
            middle = 0.5 * (lower + upper)
            below = ham.branch_arrays(middle)[3] < av
            lower = np.where(below, middle, lower)
            upper = np.where(below, upper, middle)

        q, _, H, _ = ham.branch_arrays(0.5 * (lower + upper))
        in_window = av <= self.window_edge
        q = np.where(in_window, av / 2.0, q)
        values = np.where(in_window, av * av / 4.0 - 1.0, av * q - H)
        return np.copysign(q, v), values


@lru_cache(maxsize=256)
def road_lagrangian(params):
    return RoadLagrangian(road_hamiltonian(params))


def eval_Lr(v, params):
    return road_lagrangian(params).conjugate(v)[1]


def eval_Lr_prime(v, params):
    """Conjugate momentum q* = L_r'(v), with H_r'(q*) = v"""
    return road_lagrangian(params).conjugate(v)[0]


def eval_Lr_array(v, params):
    return road_lagrangian(params).conjugate_array(v)[1]


def lagrangian_table(params, v_max, count=200001):
    """
    Tabulate L_r on [0, >= v_max] along the explicit branch parametrization

    Returns (v, L) arrays with v increasing. Linear interpolation of the
    table overestimates L_r, since L_r is convex.
    """
    ham = road_hamiltonian(params)
    s_max = ham.q_crit + math.sqrt(params.D - 1.0) * v_max / 2.0 + 1.0
    s = np.linspace(0.0, s_max, count)
    q, _, H, H_prime = ham.branch_arrays(s)
    return H_prime, q * H_prime - H
