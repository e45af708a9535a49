"""
front_geometry.py - Spreading speeds and the Wulff shape

The asymptotic invasion region is the Wulff shape W = {J(1, .) <= 0}.
Its boundary in direction theta (measured from the y-axis, the road's
normal) lies at the directional speed c_*(theta). This module computes
the road speed c_*(pi/2), directional speeds, the critical angle theta_*
below which the road does not help, the lower shape, the large-D
asymptote and convexity checks.
"""

import math
import logging
from dataclasses import dataclass, replace
from functools import lru_cache, partial

import numpy as np
from scipy.optimize import bisect, brentq, minimize_scalar

from core_hamiltonians import road_hamiltonian
from legendre import road_lagrangian
from value_function import solve_J
from utils import ConsistencyError, grow_bracket, parallel_map

ANGLE_TOLERANCE = 1e-6
ANGLE_EPSILON = 1e-6
SPEED_TOLERANCE = 1e-10
CROSS_CHECK_TOLERANCE = 1e-7
STRAIGHT_TIE = 1e-12
CONVEXITY_SLACK = 1e-6
MIN_CONVEXITY_SAMPLES = 16
KPP_SPEED = 2.0


# === Wulff Shape ===
@dataclass(frozen=True)
class WulffShape:
    """
    Sampled boundary of W

    samples holds (theta, speed) pairs from -pi/2 to pi/2 (2n - 1 entries,
    theta = 0 once). convex is None when fewer than 16 angles were sampled.
    """
    params: object
    samples: tuple
    theta_star: float
    road_speed: float
    convex: object = None
    n: int = 0

    def quadrant_samples(self):
        """The n computed samples with theta in [0, pi/2]"""
        return [(theta, speed) for theta, speed in self.samples if theta >= 0.0]

    def boundary_points(self):
        return [polar_point(speed, theta) for theta, speed in self.samples]


def polar_point(radius, theta):
    """(r sin theta, r cos theta), snapping the road direction to y = 0"""
    cos_theta = math.cos(theta)
    y = radius * cos_theta if abs(cos_theta) > 1e-12 else 0.0
    return radius * math.sin(theta), max(y, 0.0)


def _value_at_radius(radius, theta, params):
    x, y = polar_point(radius, theta)
    return solve_J(1.0, x, y, params).value


# === Road Speed ===
@lru_cache(maxsize=256)
def road_speed(params):
    """
    Spreading speed along the road

    Computed twice: as min_{q>0} H_r(q)/q by golden-section search in
    log q, and as the positive root of L_r(c) = 0 by bisection.

    Raises:
        ConsistencyError: if the two values differ by more than 1e-7
    """
    ham = road_hamiltonian(params)

    def ratio(log_q):
        q = math.exp(log_q)
        return ham.value(q) / q

    # H_r(q)/q >= max(q, 1/q) confines the minimizer
    scale = ham.value(1.0) + 1.0
    result = minimize_scalar(ratio, bounds=(-math.log(scale), math.log(scale)),
                             method="bounded", options={"xatol": 1e-10})
    speed_from_ratio = float(result.fun)

    lagrangian = road_lagrangian(params)

    def road_cost(c):
        return lagrangian.conjugate(c)[1]

    upper = grow_bracket(road_cost, 0.0, KPP_SPEED)
    speed_from_root = bisect(road_cost, 0.0, upper, xtol=1e-12)

    gap = abs(speed_from_ratio - speed_from_root)
    if gap > CROSS_CHECK_TOLERANCE:
        raise ConsistencyError(
            f"Road speed characterizations disagree for {params}: "
            f"min H_r(q)/q = {speed_from_ratio:.12g}, root of L_r = {speed_from_root:.12g}")
    return speed_from_ratio


def road_speed_bounds(params):
    """Bracket 2 sqrt(D)/(2 + mu) <= road speed <= D/sqrt(D - 1), valid for D > 2"""
    D = params.D
    return 2.0 * math.sqrt(D) / (2.0 + params.mu), D / math.sqrt(D - 1.0)


# === Directional Speeds ===
def directional_speed(theta, params):
    """
    c_*(theta): the radius where J(1, .) vanishes along direction theta

    J is strictly radially increasing and J <= L_f, so c_* >= 2 and the
    root is bracketed above 2 whenever J is negative on the speed-2 circle.
    """
    if abs(theta) > math.pi / 2 + ANGLE_TOLERANCE:
        raise ValueError(f"theta must lie in [-pi/2, pi/2], got {theta}")
    theta = min(abs(theta), math.pi / 2)

    rs = road_speed(params)
    if abs(math.cos(theta)) <= 1e-12:
        return rs

    if _value_at_radius(KPP_SPEED, theta, params) >= -STRAIGHT_TIE:
        return KPP_SPEED

    def value(c):
        return _value_at_radius(c, theta, params)

    c_max = max(4.0, 2.0 * rs)
    if value(c_max) <= 0.0:
        c_max = grow_bracket(value, KPP_SPEED, c_max)
    return brentq(value, KPP_SPEED, c_max, xtol=SPEED_TOLERANCE)


def is_road_enhanced(theta, params):
    """True when the road pushes the front beyond the KPP circle in direction theta"""
    return directional_speed(theta, params) > KPP_SPEED + ANGLE_EPSILON


def lower_shape_angle(params):
    """Angle asin(2 / road speed) where the lower shape leaves the circle"""
    return math.asin(min(1.0, KPP_SPEED / road_speed(params)))


def critical_angle(params):
    """
    theta_*: infimum of the directions where c_* > 2 + 1e-6

    Bisection on theta of J(1, (2 + eps) e_theta), which changes sign
    exactly where c_*(theta) crosses 2 + eps.
    """
    if params.D <= 2.0:
        return math.pi / 2

    radius = KPP_SPEED + ANGLE_EPSILON

    def value(theta):
        return _value_at_radius(radius, theta, params)

    if value(math.pi / 2) >= 0.0:
        logging.warning(f"Road speed does not exceed {radius} for {params}; theta_* set to pi/2")
        return math.pi / 2

    theta_star = bisect(value, 0.0, math.pi / 2, xtol=ANGLE_TOLERANCE / 100)

    if theta_star >= lower_shape_angle(params):
        logging.warning(f"theta_* = {theta_star:.8f} is not below the lower-shape angle "
                        f"{lower_shape_angle(params):.8f} for {params}")
    return theta_star


def critical_angle_bounds(params):
    """Bracket [asin(7/(16 sqrt(D-1))), min(pi/2, asin((2+mu)/sqrt(D)))) for theta_*"""
    D = params.D
    lower = math.asin(min(1.0, 7.0 / (16.0 * math.sqrt(D - 1.0))))
    ratio = (2.0 + params.mu) / math.sqrt(D)
    upper = math.pi / 2 if ratio >= 1.0 else math.asin(ratio)
    return lower, upper


# === Shapes ===
def _speed_at(theta, params):
    return directional_speed(theta, params)


def sample_wulff(params, n, workers=None):
    """
    Sample c_* at n angles uniformly spaced in [0, pi/2] and mirror

    Args:
        params: ModelParams
        n: Number of angles in the quadrant, >= 8
        workers: Worker processes for the angle sweep (RF_THREADS caps it)

    Returns:
        WulffShape
    """
    if n < 8:
        raise ValueError(f"n must be at least 8, got {n}")

    thetas = [float(theta) for theta in np.linspace(0.0, math.pi / 2, n)]
    speeds = parallel_map(partial(_speed_at, params=params), thetas, workers)

    quadrant = list(zip(thetas, speeds))
    mirrored = [(-theta, speed) for theta, speed in reversed(quadrant[1:])]
    shape = WulffShape(params=params, samples=tuple(mirrored + quadrant),
                       theta_star=critical_angle(params), road_speed=road_speed(params), n=n)

    if n >= MIN_CONVEXITY_SAMPLES:
        shape = replace(shape, convex=convexity_check(shape))
    return shape


def convexity_check(shape):
    """Midpoints of adjacent boundary samples must lie in W (J(1, .) <= 1e-6)"""
    if shape.n < MIN_CONVEXITY_SAMPLES:
        raise ValueError(f"Convexity check needs at least {MIN_CONVEXITY_SAMPLES} samples, got {shape.n}")

    points = shape.boundary_points()
    for (x1, y1), (x2, y2) in zip(points[:-1], points[1:]):
        mid_x, mid_y = 0.5 * (x1 + x2), 0.5 * (y1 + y2)
        value = solve_J(1.0, mid_x, mid_y, shape.params).value
        if value > CONVEXITY_SLACK:
            logging.info(f"Convexity fails at midpoint ({mid_x:.6f}, {mid_y:.6f}): J = {value:.3e}")
            return False
    return True


def lower_shape_speed(theta, params):
    """Boundary of the lower shape: the speed-2 circle capped by tangents to the road points"""
    if abs(theta) > math.pi / 2 + ANGLE_TOLERANCE:
        raise ValueError(f"theta must lie in [-pi/2, pi/2], got {theta}")
    underline = lower_shape_angle(params)
    offset = abs(theta) - underline
    if offset <= 0.0:
        return KPP_SPEED
    return KPP_SPEED / math.cos(offset)


def lower_shape_contains(x, y, params):
    if y < 0:
        return False
    radius = math.hypot(x, y)
    if radius == 0.0:
        return True
    return radius <= lower_shape_speed(math.atan2(abs(x), y), params) + CONVEXITY_SLACK


def front_point(theta, params):
    """Boundary point of W in direction theta with its optimal path data"""
    x, y = polar_point(directional_speed(theta, params), theta)
    return solve_J(1.0, x, y, params)


# === Large-D Asymptotics ===
def _zeta(theta, params):
    """Positive root of theta^2 = zeta^2 + 1 + mu zeta/(kappa nu + zeta), 0 for theta <= 1"""
    if theta <= 1.0:
        return 0.0
    kn = params.kappa * params.nu

    def rhs_gap(zeta):
        return zeta * zeta + 1.0 + params.mu * zeta / (kn + zeta) - theta * theta

    upper = grow_bracket(rhs_gap, 0.0, theta)
    return bisect(rhs_gap, 0.0, upper, xtol=1e-14)


def large_D_asymptote(params):
    """
    Limit of road_speed / sqrt(D) as D grows: min over theta of (1 + zeta_theta^2)/theta
    """
    def objective(theta):
        zeta = _zeta(theta, params)
        return (1.0 + zeta * zeta) / theta

    theta_max = 2.0
    while objective(2.0 * theta_max) < objective(theta_max) and theta_max < 1e12:
        theta_max *= 2.0

    result = minimize_scalar(objective, bounds=(1.0, 2.0 * theta_max), method="bounded",
                             options={"xatol": 1e-10})
    return min(float(result.fun), objective(1.0))


def mu_infinity_asymptote(params):
    """
    Leading behaviour K / sqrt(mu) of the large-D asymptote as mu grows

    With theta^2 = mu s the root zeta_theta tends to kappa nu s/(1 - s), so
    K = min over s in (0, 1) of (1 + (kappa nu s/(1 - s))^2)/sqrt(s);
    K is about 2.15845 when kappa nu = 1.
    """
    kn = params.kappa * params.nu

    def objective(s):
        zeta = kn * s / (1.0 - s)
        return (1.0 + zeta * zeta) / math.sqrt(s)

    result = minimize_scalar(objective, bounds=(1e-12, 1.0 - 1e-12), method="bounded",
                             options={"xatol": 1e-12})
    return float(result.fun) / math.sqrt(params.mu)
