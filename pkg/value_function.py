"""
value_function.py - Lax-Oleinik evaluation of the control value function J

J(t, x, y) is the least cost of a path from the origin to (x, y) in time t,
with cost L_f in the field and L_r on the road. Optimal paths run along the
road up to a departure time tau0 and abscissa z0, then straight across the
field, so J reduces to a minimization over (tau, z). The formula is solved
at t = 1 on the rescaled point and scaled back with J(t,x,y) = t J(1,x/t,y/t).
"""

import math
import logging
from dataclasses import dataclass
from functools import lru_cache, partial

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from core_hamiltonians import road_hamiltonian, eval_Hr, eval_Hr_prime
from legendre import eval_Lf, eval_Lr, road_lagrangian, lagrangian_table
from utils import SolverError, grow_bracket, parallel_map

ARGUMENT_TOLERANCE = 1e-9
ROOT_TOLERANCE = 1e-14
TIE_TOLERANCE = 1e-12
REFINE_ACCEPT = 1e-10
RESCALED_LIMIT = 1e50
ORACLE_TABLE_SIZE = 200001


@dataclass(frozen=True)
class LaxOleinikSolution:
    """J(t, x, y) with the minimizer data of its two-segment optimal path"""
    t: float
    x: float
    y: float
    value: float
    tau0: float
    z0: float
    q0: float
    p0: float

    @property
    def on_road_speed(self):
        return self.z0 / self.tau0 if self.tau0 > 0 else 0.0

    @property
    def field_velocity(self):
        return (2.0 * self.q0, 2.0 * self.p0)

    @property
    def field_speed(self):
        return 2.0 * math.hypot(self.q0, self.p0)


def _validate_point(t, x, y):
    if not (math.isfinite(t) and math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"Non-finite evaluation point ({t}, {x}, {y})")
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if y < 0:
        raise ValueError(f"y must be nonnegative, got {y}")
    if max(abs(x), y) > RESCALED_LIMIT * t:
        raise ValueError(f"(x, y)/t = ({x / t:.3g}, {y / t:.3g}) exceeds the supported magnitude {RESCALED_LIMIT:g}")


# === Rescaled Minimization ===
def _inner_minimum(tau, x, y, params):
    """
    Minimize over z for fixed 0 < tau < 1

    The objective is convex in z; its minimizer solves
    L_r'(z/tau) = (x - z)/(2(1 - tau)). Parametrizing the road momentum
    by the branch parameter s makes both sides explicit, the left one
    increasing and the right one decreasing in s.

    Returns:
        tuple: (value, z, s)
    """
    ham = road_hamiltonian(params)
    field_time = 1.0 - tau

    def momentum_gap(s):
        q, _, _, H_prime = ham.branch_point(s)
        return q - (x - tau * H_prime) / (2.0 * field_time)

    if x <= 0.0:
        s = 0.0
    else:
        upper = grow_bracket(momentum_gap, 0.0, 1.0)
        s = brentq(momentum_gap, 0.0, upper, xtol=ROOT_TOLERANCE)

    q, _, H, H_prime = ham.branch_point(s)
    z = min(tau * H_prime, x)
    value = ((x - z) ** 2 + y * y) / (4.0 * field_time) - field_time + tau * (q * H_prime - H)
    return value, z, s


def _departure_candidate(p, y, params):
    """Path data when the field momentum is (q, p) with p = p_q; returns (value, tau, z, q, x_end)"""
    ham = road_hamiltonian(params)
    q, _, H, H_prime = ham.branch_point(ham.q_crit + p)
    field_time = y / (2.0 * p)
    tau = 1.0 - field_time
    z = tau * H_prime
    value = field_time * (q * q + p * p - 1.0) + tau * (q * H_prime - H)
    return value, tau, z, q, z + 2.0 * q * field_time


def _refine_departure(x, y, tau_guess, golden_value, params):
    """
    Sharpen an interior minimizer with the stationarity conditions

    At an interior minimizer the field momentum is (q0, p_{q0}) and the
    road speed is H_r'(q0); the endpoint condition x = z0 + 2 q0 (1 - tau0)
    is then one equation in p0. Returns None when no root is bracketed
    near the golden-section estimate.
    """
    p_floor = y / 2.0
    p_guess = y / (2.0 * (1.0 - tau_guess))

    def endpoint_gap(p):
        return _departure_candidate(p, y, params)[4] - x

    lower = max(p_floor, 0.5 * p_guess)
    upper = 2.0 * p_guess
    try:
        if endpoint_gap(lower) > 0.0:
            lower = p_floor
        if endpoint_gap(lower) > 0.0:
            return None
        if endpoint_gap(upper) < 0.0:
            upper = grow_bracket(endpoint_gap, lower, upper)
        p = brentq(endpoint_gap, lower, upper, xtol=ROOT_TOLERANCE)
    except (ValueError, SolverError, ZeroDivisionError, OverflowError):
        return None

    value, tau, z, q, _ = _departure_candidate(p, y, params)
    if not (0.0 <= tau < 1.0) or value > golden_value + REFINE_ACCEPT:
        return None
    return value, tau, min(z, x), q, p


@lru_cache(maxsize=65536)
def _solve_rescaled(x, y, params):
    """Minimize the Lax-Oleinik objective at t = 1 with x >= 0; returns (value, tau, z, q, p)"""
    if x == 0.0 and y == 0.0:
        return -1.0, 1.0, 0.0, 0.0, 0.0

    if y == 0.0:
        q, value = road_lagrangian(params).conjugate(x)
        return value, 1.0, x, q, road_hamiltonian(params).solve_pq(q)

    straight = (eval_Lf(x, y), 0.0, 0.0, x / 2.0, y / 2.0)

    # phi(tau) >= y^2/(4(1 - tau)) - 1, which exceeds L_f(x, y) beyond tau_hi
    tau_hi = x * x / (x * x + y * y)
    if tau_hi <= 0.0:
        return straight

    def outer(tau):
        return _inner_minimum(tau, x, y, params)[0]

    result = minimize_scalar(outer, bounds=(0.0, tau_hi), method="bounded",
                             options={"xatol": ARGUMENT_TOLERANCE})
    tau = float(result.x)
    value, z, _ = _inner_minimum(tau, x, y, params)

    # ties go to the smallest tau
    if value >= straight[0] - TIE_TOLERANCE:
        return straight

    refined = _refine_departure(x, y, tau, value, params)
    if refined is not None:
        return refined

    field_time = 1.0 - tau
    return value, tau, z, (x - z) / (2.0 * field_time), y / (2.0 * field_time)


# === Public Operations ===
def solve_J(t, x, y, params):
    """
    Evaluate J(t, x, y) and its minimizer

    Args:
        t: Time, > 0
        x: Abscissa along the road
        y: Distance from the road, >= 0
        params: ModelParams

    Returns:
        LaxOleinikSolution with tau0, z0 scaled to time t
    """
    _validate_point(t, x, y)
    value, tau, z, q, p = _solve_rescaled(abs(x) / t, y / t, params)
    return LaxOleinikSolution(t=t, x=x, y=y, value=t * value, tau0=t * tau,
                              z0=t * z, q0=q, p0=p)


def solve_J_oracle(t, x, y, params, n_tau=801, n_z=801):
    """
    Brute-force J by exhaustive search over a uniform (tau, z) grid

    Every grid value is the cost of an admissible path, and L_r comes from
    a linearly interpolated table that overestimates it, so the result is an
    upper bound on J that tightens as the grids refine.
    """
    _validate_point(t, x, y)
    if n_tau < 2 or n_z < 2:
        raise ValueError(f"Grid counts must be at least 2, got {n_tau} x {n_z}")

    xh, yh = abs(x) / t, y / t
    best = eval_Lf(xh, yh)  # tau = 0 column: the road term forces z = 0

    if yh == 0.0:
        best = min(best, eval_Lr(xh, params))  # tau = 1: field term needs z = x

    taus = np.linspace(0.0, 1.0, n_tau)[1:-1, None]
    zs = np.linspace(0.0, xh, n_z)[None, :]
    speed_cap = max(50.0, 10.0 * (xh + yh))
    table_v, table_L = lagrangian_table(params, speed_cap, ORACLE_TABLE_SIZE)

    road_cost = np.interp(zs / taus, table_v, table_L, right=np.inf)
    field_time = 1.0 - taus
    objective = ((xh - zs) ** 2 + yh * yh) / (4.0 * field_time) - field_time + taus * road_cost
    best = min(best, float(objective.min()))
    return t * best


def optimal_path(t, x, y, params, n_samples=101):
    """
    Sample the two-segment optimal path

    Returns:
        list: (s, (x, y)) pairs for s uniformly spaced in [0, t]
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be at least 2, got {n_samples}")
    solution = solve_J(t, x, y, params)
    return [(s, path_position(solution, s)) for s in np.linspace(0.0, t, n_samples)]


def path_position(solution, s):
    """Position gamma(s) on the optimal path of a LaxOleinikSolution"""
    sign = 1.0 if solution.x >= 0 else -1.0
    tau0, z0 = solution.tau0, solution.z0
    if s >= solution.t:
        return (solution.x, solution.y)
    if s <= tau0 and tau0 > 0:
        return (sign * z0 * s / tau0, 0.0)
    field_time = s - tau0
    return (sign * (z0 + 2.0 * solution.q0 * field_time), 2.0 * solution.p0 * field_time)


def grad_J(t, x, y, params):
    """Gradient (q0 sign(x), p0) of J off the road"""
    if y <= 0:
        raise ValueError("grad_J is defined off the road only (y > 0)")
    solution = solve_J(t, x, y, params)
    sign = 1.0 if x >= 0 else -1.0
    return sign * solution.q0, solution.p0


def eval_w(t, x, y, params):
    """Limit of the Hopf-Cole transform: max{0, J}"""
    return max(0.0, solve_J(t, x, y, params).value)


def road_value(t, x, params):
    """J on the road, t L_r(x/t)"""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    return t * eval_Lr(x / t, params)


def field_segment_value(s, solution, params):
    """
    Closed form of J(s, gamma(s)) on the field segment s in [tau0, t]

    Valid when the path leaves the road at tau0 > 0.
    """
    if solution.tau0 <= 0:
        raise ValueError("Closed form applies only to paths that use the road")
    q0 = solution.q0
    return (s - solution.tau0) * (eval_Hr(q0, params) - 2.0) \
        + solution.tau0 * eval_Lr(eval_Hr_prime(q0, params), params)


def _solve_point(point, params):
    return solve_J(*point, params)


def evaluate_many(points, params, workers=None):
    """solve_J over (t, x, y) points, in input order"""
    solutions = parallel_map(partial(_solve_point, params=params), points, workers)
    logging.debug(f"Evaluated J at {len(solutions)} points")
    return solutions
