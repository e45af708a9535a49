"""
conical.py - Fronts in a conical domain bounded by two roads

The sector Omega_a has opening 2a and is bounded by the road Gamma_0 (the
positive x-axis) and the road Gamma_a (the ray at polar angle 2a). The
reflection Psi_a across the bisector exchanges the two roads. With equal
road parameters the value function is J_a = min{J, J o Psi_a}, so the
sector Wulff shape is (W u Psi_a W) restricted to the sector. With a
slower second road (D_tilde > D) only speed bounds are available.
"""

import math
import logging
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.optimize import bisect, brentq

from core_hamiltonians import ModelParams
from front_geometry import (ANGLE_TOLERANCE, critical_angle, directional_speed,
                            polar_point, road_speed)
from value_function import solve_J
from utils import ConsistencyError, parallel_map

SECTOR_TOLERANCE = 1e-9
BOUND_AGREEMENT = 1e-6
SUPPORT_SLACK = 1e-6
THRESHOLD_XTOL = 1e-4


@dataclass(frozen=True)
class ConeGeometry:
    """Sector of opening 2a, a in (0, pi/2]"""
    a: float

    def __post_init__(self):
        if not (0.0 < self.a <= math.pi / 2 + 1e-15):
            raise ValueError(f"Cone half-angle must lie in (0, pi/2], got {self.a}")

    @property
    def reflection(self):
        return reflection_matrix(self.a)

    @property
    def sector(self):
        """Angles from the y-axis covered by the sector: [pi/2 - 2a, pi/2]"""
        return math.pi / 2 - 2.0 * self.a, math.pi / 2

    @property
    def bisector_angle(self):
        return math.pi / 2 - self.a

    def contains(self, x, y, tol=SECTOR_TOLERANCE):
        """Membership of the closed sector"""
        if x == 0.0 and y == 0.0:
            return True
        if y < -tol:
            return False
        polar = math.atan2(max(y, 0.0), x)
        return -tol <= polar <= 2.0 * self.a + tol

    def distance_to_roads(self, x, y):
        """Euclidean distance to Gamma_0 u Gamma_a"""
        to_first = abs(y) if x >= 0 else math.hypot(x, y)
        ex, ey = math.cos(2.0 * self.a), math.sin(2.0 * self.a)
        along = x * ex + y * ey
        to_second = abs(x * ey - y * ex) if along >= 0 else math.hypot(x, y)
        return min(to_first, to_second)


def reflection_matrix(a):
    """Reflection across the ray at polar angle a"""
    c, s = math.cos(2.0 * a), math.sin(2.0 * a)
    return np.array([[c, s], [s, -c]])


def reflect(a, x, y):
    if not (0.0 < a <= math.pi / 2 + 1e-15):
        raise ValueError(f"Cone half-angle must lie in (0, pi/2], got {a}")
    c, s = math.cos(2.0 * a), math.sin(2.0 * a)
    return c * x + s * y, s * x - c * y


def _require_equal_roads(params):
    if params.D_tilde is not None and params.D_tilde != params.D:
        raise ValueError("The min formula for J_a needs equal road diffusivities; "
                         "use unequal_diffusion_speed_bounds for D_tilde != D")


# === Value Function ===
def solve_Ja(t, x, y, cone, params):
    """J_a(t, x, y) = min{J(t, x, y), J(t, Psi_a(x, y))}"""
    _require_equal_roads(params)
    if not cone.contains(x, y):
        raise ValueError(f"Point ({x}, {y}) lies outside the sector of half-angle {cone.a}")

    rx, ry = reflect(cone.a, x, y)
    direct = solve_J(t, x, max(y, 0.0), params).value
    mirrored = solve_J(t, rx, max(ry, 0.0), params).value
    return min(direct, mirrored)


def eval_wa(t, x, y, cone, params):
    return max(0.0, solve_Ja(t, x, y, cone, params))


# === Sector Speeds ===
def _check_sector_angle(theta, cone):
    low, high = cone.sector
    if not (low - SECTOR_TOLERANCE <= theta <= high + SECTOR_TOLERANCE):
        raise ValueError(f"theta={theta} lies outside the sector [{low}, {high}]")


def cone_speed(theta, cone, params):
    """
    c_{*a}(theta) for theta in [pi/2 - 2a, pi/2]

    Directions closer to Gamma_0 than the bisector see the half-plane
    speed; the others see it through the reflection.
    """
    _require_equal_roads(params)
    _check_sector_angle(theta, cone)
    single_road = params.with_diffusivity(params.D)
    if theta >= cone.bisector_angle:
        return directional_speed(min(theta, math.pi / 2), single_road)
    return directional_speed(min(math.pi - 2.0 * cone.a - theta, math.pi / 2), single_road)


def sector_branch(theta, cone):
    """0 when the sample is nearer Gamma_0, 1 when nearer Gamma_a"""
    return 0 if theta >= cone.bisector_angle else 1


@dataclass(frozen=True)
class ConeWulffReport:
    """Sector-restricted Wulff samples and the convexity verdicts"""
    cone: ConeGeometry
    params: ModelParams
    samples: tuple  # (theta, speed, branch)
    theta_star: float
    road_speed: float
    convex: bool
    supporting_line_convex: bool
    threshold_D: object = None

    def boundary_points(self):
        return [polar_point(speed, theta) for theta, speed, _ in self.samples]

    @property
    def criteria_agree(self):
        return self.convex == self.supporting_line_convex


def _cone_speed_at(theta, cone, params):
    return cone_speed(theta, cone, params)


def cone_wulff(cone, params, n=32, estimate_threshold=False, workers=None):
    """
    Sample c_{*a} across the sector and decide convexity of W_a

    W_a is convex iff a >= pi/2 - theta_*. The supporting line through
    the bisector point, perpendicular to the bisector, is checked against
    every sample as an independent verdict.
    """
    if n < 16:
        raise ValueError(f"n must be at least 16, got {n}")
    _require_equal_roads(params)

    low, high = cone.sector
    thetas = [float(theta) for theta in np.linspace(low, high, n)]
    speeds = parallel_map(partial(_cone_speed_at, cone=cone, params=params), thetas, workers)
    samples = tuple((theta, speed, sector_branch(theta, cone)) for theta, speed in zip(thetas, speeds))

    theta_star = critical_angle(params)
    convex = cone.a >= math.pi / 2 - theta_star - ANGLE_TOLERANCE

    bisector = cone.bisector_angle
    support = cone_speed(bisector, cone, params)
    supporting_line_convex = all(
        speed * math.cos(theta - bisector) <= support + SUPPORT_SLACK for theta, speed, _ in samples)

    threshold = nonconvexity_threshold(cone, params) if estimate_threshold else None
    report = ConeWulffReport(cone=cone, params=params, samples=samples, theta_star=theta_star,
                             road_speed=road_speed(params.with_diffusivity(params.D)), convex=convex,
                             supporting_line_convex=supporting_line_convex, threshold_D=threshold)
    if not report.criteria_agree:
        logging.warning(f"Convexity verdicts differ for a={cone.a:.6f}, D={params.D}: "
                        f"angle criterion {convex}, supporting line {supporting_line_convex}")
    return report


def nonconvexity_bound(cone, params):
    """Diffusivity 4(2 + mu)^2 csc^2(2a) beyond which W_a is certainly nonconvex"""
    sine = math.sin(2.0 * cone.a)
    if sine <= 1e-12:
        return math.inf
    return 4.0 * (2.0 + params.mu) ** 2 / (sine * sine)


def nonconvexity_threshold(cone, params):
    """
    Estimate D_a, the diffusivity where W_a stops being convex

    Bisection in D of a - (pi/2 - theta_*(D)) on [2, 4(2+mu)^2 csc^2(2a)].
    Returns None for the half-plane, which is convex for every D.
    """
    upper = nonconvexity_bound(cone, params)
    if not math.isfinite(upper):
        return None

    def convexity_margin(D):
        return cone.a - (math.pi / 2 - critical_angle(params.with_diffusivity(D)))

    if convexity_margin(upper) >= 0.0:
        raise ConsistencyError(f"W_a still convex at D={upper:.6g} for a={cone.a:.6f}")
    return bisect(convexity_margin, 2.0, upper, xtol=THRESHOLD_XTOL, rtol=1e-8)


# === Unequal Road Diffusivities ===
@dataclass(frozen=True)
class SpeedBounds:
    lower: float
    upper: float
    verified: bool = True


def unequal_diffusion_speed_bounds(theta, cone, params, force=False, augment=True):
    """
    Bracket c_{*a}(theta) when Gamma_a diffuses with D_tilde >= D

    Args:
        theta: Direction in the sector
        cone: ConeGeometry with a < pi/4 (larger a needs force=True)
        params: ModelParams carrying D_tilde
        force: Evaluate for a >= pi/4; the result is marked unverified
        augment: Raise the lower bound by the equal-diffusivity cone speed

    Returns:
        SpeedBounds
    """
    if params.D_tilde is None:
        raise ValueError("unequal_diffusion_speed_bounds needs D_tilde")
    verified = cone.a < math.pi / 4
    if not verified and not force:
        raise ValueError(f"Bounds are established for a < pi/4 only, got a={cone.a}; pass force=True")
    _check_sector_angle(theta, cone)

    fast = params.with_diffusivity(params.D_tilde)
    slow = params.with_diffusivity(params.D)
    mirrored = min(math.pi - 2.0 * cone.a - theta, math.pi / 2)
    direct = max(min(theta, math.pi / 2), -math.pi / 2)

    mirrored_fast = directional_speed(mirrored, fast)
    lower = mirrored_fast
    if augment:
        lower = max(lower, cone_speed(theta, cone, slow))
    upper = max(directional_speed(direct, fast), mirrored_fast)

    if lower > upper + BOUND_AGREEMENT:
        raise ConsistencyError(f"Lower bound {lower} exceeds upper bound {upper} at theta={theta}")

    if abs(theta - cone.sector[0]) <= ANGLE_TOLERANCE:
        fast_road = road_speed(fast)
        if abs(lower - fast_road) > BOUND_AGREEMENT or abs(upper - fast_road) > BOUND_AGREEMENT:
            raise ConsistencyError(f"Speed along the fast road should equal {fast_road}, "
                                   f"got bounds [{lower}, {upper}]")
    return SpeedBounds(lower=lower, upper=upper, verified=verified)


def slow_road_threshold(cone, params):
    """
    Estimate D_tilde_min: above it the slow road Gamma_0 is outrun

    The lower bound at theta = pi/2 exceeds c_*(pi/2; D) once
    c_*(pi/2 - 2a; D_tilde) > c_*(pi/2; D). As D_tilde grows this speed
    tends to 2/sin(2a), so no threshold exists when that limit does not
    beat the slow road speed; None is returned then.
    """
    slow = params.with_diffusivity(params.D)
    target = road_speed(slow)
    direction = math.pi / 2 - 2.0 * cone.a
    if direction <= 0.0 or 2.0 / math.sin(2.0 * cone.a) <= target:
        return None

    def excess(log_D_tilde):
        return directional_speed(direction, params.with_diffusivity(math.exp(log_D_tilde))) - target

    lower = math.log(params.D)
    if excess(lower) > 0.0:
        return params.D
    upper = lower + math.log(2.0)
    while excess(upper) <= 0.0:
        upper += math.log(2.0)
        if upper - lower > 80.0:
            logging.warning(f"No slow-road threshold below D_tilde={math.exp(upper):.3g}")
            return None
    return math.exp(brentq(excess, lower, upper, xtol=1e-8))
