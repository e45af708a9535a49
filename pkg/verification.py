"""
verification.py - Named property checks across every numerical module

Each check returns a CheckResult with the measured deviation, the
tolerance it is held to and a short statement of the property. Modules are
reached through their attributes (core_hamiltonians.eval_Hr rather than a
bound import) so a patched function is seen by every check that uses it.
"""

import math
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

import core_hamiltonians
import legendre
import value_function
import front_geometry
import conical
import rd_simulator
import state
from utils import add_log_entry

GROUPS = ("hamiltonian", "legendre", "value", "geometry", "cone", "simulation")
SAMPLE_MOMENTA = (0.0, 0.1, 0.3, 0.6, 1.0, 1.5, 2.5, 4.0)
SAMPLE_VELOCITIES = (0.0, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0)
ORACLE_POINTS = ((1.0, 0.5, 0.5), (1.0, 2.0, 0.5), (1.0, 3.0, 1.0), (2.0, 1.0, 3.0), (1.0, 4.0, 0.2))
CONE_ANGLES = (5 * math.pi / 12, math.pi / 4, math.pi / 8)


@dataclass(frozen=True)
class CheckResult:
    name: str
    group: str
    passed: bool
    measured: object
    tolerance: float
    reference: str


@dataclass
class VerificationReport:
    params: object
    quick: bool
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(result.passed for result in self.checks)

    @property
    def failures(self):
        return [result for result in self.checks if not result.passed]

    def as_dict(self):
        return {
            "passed": self.passed,
            "quick": self.quick,
            "checks": [asdict(result) for result in self.checks],
        }


_REGISTRY = []


def register_check(name, group, tolerance, reference):
    """Register a check function returning its measured deviation (or a (deviation, passed) pair)"""
    def register(func):
        _REGISTRY.append((name, group, tolerance, reference, func))
        return func
    return register


def registered_checks(group=None):
    return [entry[0] for entry in _REGISTRY if group is None or entry[1] == group]


# === Hamiltonian Checks ===
@register_check("hr_boundary_agreement", "hamiltonian", 1e-9,
                "H_r(q) = H_f(q, p_q) = F0(q, p_q) beyond the critical momentum")
def _hr_boundary_agreement(params):
    worst = 0.0
    q_crit = 1.0 / math.sqrt(params.D - 1.0)
    for q in SAMPLE_MOMENTA:
        q = q + q_crit
        p = core_hamiltonians.solve_pq(q, params)
        H = core_hamiltonians.eval_Hr(q, params)
        worst = max(worst, abs(H - core_hamiltonians.eval_Hf(q, p)),
                    abs(H - core_hamiltonians.eval_F0(q, p, params)))
    return worst


@register_check("hr_quadratic_window", "hamiltonian", 1e-12,
                "H_r(q) = q^2 + 1 for |q| <= 1/sqrt(D-1)")
def _hr_quadratic_window(params):
    q_crit = 1.0 / math.sqrt(params.D - 1.0)
    return max(abs(core_hamiltonians.eval_Hr(q, params) - (q * q + 1.0))
               for q in np.linspace(-q_crit, q_crit, 11))


@register_check("hr_even_convex", "hamiltonian", 1e-9, "H_r is even and convex")
def _hr_even_convex(params):
    qs = np.linspace(-4.0, 4.0, 161)
    values = np.array([core_hamiltonians.eval_Hr(q, params) for q in qs])
    asymmetry = float(np.max(np.abs(values - values[::-1])))
    concavity = float(max(0.0, -np.min(values[:-2] - 2.0 * values[1:-1] + values[2:])))
    return max(asymmetry, concavity)


@register_check("hr_derivative", "hamiltonian", 1e-5, "H_r' matches a centred difference of H_r")
def _hr_derivative(params):
    step = 1e-6
    worst = 0.0
    for q in SAMPLE_MOMENTA[1:]:
        numeric = (core_hamiltonians.eval_Hr(q + step, params)
                   - core_hamiltonians.eval_Hr(q - step, params)) / (2.0 * step)
        worst = max(worst, abs(numeric - core_hamiltonians.eval_Hr_prime(q, params)))
    return worst


# === Legendre Checks ===
@register_check("fenchel_identity", "legendre", 1e-8, "L_r(H_r'(q)) + H_r(q) = q H_r'(q)")
def _fenchel_identity(params):
    worst = 0.0
    for q in SAMPLE_MOMENTA:
        v = core_hamiltonians.eval_Hr_prime(q, params)
        gap = legendre.eval_Lr(v, params) + core_hamiltonians.eval_Hr(q, params) - q * v
        worst = max(worst, abs(gap))
    return worst


@register_check("double_conjugation", "legendre", 1e-6, "sup_v (q v - L_r(v)) = H_r(q)")
def _double_conjugation(params):
    worst = 0.0
    for q in SAMPLE_MOMENTA:
        centre = core_hamiltonians.eval_Hr_prime(q, params)
        velocities = np.linspace(centre - 1.0, centre + 1.0, 20001)
        recovered = float(np.max(q * velocities - legendre.eval_Lr_array(velocities, params)))
        worst = max(worst, abs(recovered - core_hamiltonians.eval_Hr(q, params)))
    return worst


@register_check("lr_quadratic_window", "legendre", 1e-12, "L_r(v) = v^2/4 - 1 for |v| <= 2/sqrt(D-1)")
def _lr_quadratic_window(params):
    edge = 2.0 / math.sqrt(params.D - 1.0)
    return max(abs(legendre.eval_Lr(v, params) - (v * v / 4.0 - 1.0))
               for v in np.linspace(-edge, edge, 11))


@register_check("lr_below_field", "legendre", 1e-12, "L_r(v) <= v^2/4 - 1")
def _lr_below_field(params):
    return max(0.0, max(legendre.eval_Lr(v, params) - (v * v / 4.0 - 1.0) for v in SAMPLE_VELOCITIES))


# === Value Function Checks ===
@register_check("oracle_agreement", "value", 5e-3, "Lax-Oleinik minimum agrees with an 801 x 801 grid search")
def _oracle_agreement(params):
    worst = 0.0
    for t, x, y in ORACLE_POINTS:
        value = value_function.solve_J(t, x, y, params).value
        oracle = value_function.solve_J_oracle(t, x, y, params)
        if value > oracle + 1e-9:
            return value - oracle, False
        worst = max(worst, oracle - value)
    return worst


@register_check("field_upper_bound", "value", 1e-12, "J(t, x, y) <= t L_f(x/t, y/t)")
def _field_upper_bound(params):
    worst = 0.0
    for t, x, y in ORACLE_POINTS:
        straight = t * legendre.eval_Lf(x / t, y / t)
        worst = max(worst, value_function.solve_J(t, x, y, params).value - straight)
    return max(worst, 0.0)


@register_check("invasion_path_sign", "value", 1e-5,
                "Optimal paths to road-enhanced front points stay where J >= 0, "
                "ride the road faster than the road speed and cross the field slower than 2")
def _invasion_path_sign(params):
    if params.D <= 2.0:
        return 0.0
    theta_star = front_geometry.critical_angle(params)
    rs = front_geometry.road_speed(params)
    worst = 0.0
    for theta in np.linspace(theta_star + 0.05 * (math.pi / 2 - theta_star), math.pi / 2 - 1e-3, 5):
        solution = front_geometry.front_point(float(theta), params)
        if solution.tau0 <= 0.0:
            continue
        for s, (px, py) in value_function.optimal_path(solution.t, solution.x, solution.y, params, 21)[1:]:
            worst = max(worst, -value_function.solve_J(s, px, py, params).value)
        if solution.on_road_speed <= rs or solution.field_speed >= 2.0:
            return worst, False
    return worst


# === Geometry Checks ===
@register_check("road_speed_threshold", "geometry", 1e-7, "road speed is 2 for D <= 2 and exceeds 2 beyond")
def _road_speed_threshold(params):
    speed = front_geometry.road_speed(params)
    if params.D <= 2.0:
        return abs(speed - 2.0)
    return 0.0 if speed > 2.0001 else 2.0001 - speed


@register_check("road_speed_bounds", "geometry", 1e-9, "2 sqrt(D)/(2 + mu) <= road speed <= D/sqrt(D - 1)")
def _road_speed_bounds(params):
    if params.D <= 2.0:
        return 0.0
    lower, upper = front_geometry.road_speed_bounds(params)
    speed = front_geometry.road_speed(params)
    return max(0.0, lower - speed, speed - upper)


@register_check("critical_angle_bracket", "geometry", 1e-6,
                "asin(7/(16 sqrt(D-1))) <= theta_* < min(pi/2, asin((2+mu)/sqrt(D))) and theta_* < asin(2/road speed)")
def _critical_angle_bracket(params):
    if params.D <= 2.0:
        return 0.0
    theta_star = front_geometry.critical_angle(params)
    lower, upper = front_geometry.critical_angle_bounds(params)
    excess = max(0.0, lower - theta_star, theta_star - upper)
    if theta_star >= front_geometry.lower_shape_angle(params):
        return theta_star - front_geometry.lower_shape_angle(params), False
    return excess


@register_check("tangent_bound", "geometry", 1e-4, "c_*(theta) <= 2/cos(theta - theta_*) for theta >= theta_*")
def _tangent_bound(params):
    if params.D <= 2.0:
        return 0.0
    theta_star = front_geometry.critical_angle(params)
    worst = 0.0
    for theta in np.linspace(theta_star, math.pi / 2, 6):
        bound = 2.0 / math.cos(float(theta) - theta_star)
        worst = max(worst, front_geometry.directional_speed(float(theta), params) - bound)
    return max(worst, 0.0)


@register_check("wulff_convex", "geometry", 0.0, "W is convex")
def _wulff_convex(params):
    shape = front_geometry.sample_wulff(params, 16)
    return 0.0 if shape.convex else 1.0


@register_check("large_D_scaling", "geometry", 2e-3, "road speed/sqrt(D) approaches its large-D limit")
def _large_D_scaling(params):
    big = params.with_diffusivity(1e6)
    return abs(front_geometry.road_speed(big) / 1e3 - front_geometry.large_D_asymptote(big))


# === Cone Checks ===
@register_check("cone_road_speeds", "cone", 5e-4, "both roads of the cone spread at the road speed")
def _cone_road_speeds(params):
    single = params.with_diffusivity(params.D)
    rs = front_geometry.road_speed(single)
    worst = 0.0
    for a in CONE_ANGLES:
        cone = conical.ConeGeometry(a)
        for theta in cone.sector:
            worst = max(worst, abs(conical.cone_speed(theta, cone, single) - rs))
    return worst


@register_check("cone_distance_bound", "cone", 1e-6, "every W_a boundary sample lies within 2 of the roads")
def _cone_distance_bound(params):
    single = params.with_diffusivity(params.D)
    worst = 0.0
    for a in CONE_ANGLES:
        report = conical.cone_wulff(conical.ConeGeometry(a), single, n=16)
        for x, y in report.boundary_points():
            worst = max(worst, report.cone.distance_to_roads(x, y) - 2.0)
    return max(worst, 0.0)


@register_check("cone_nonconvex_beyond_bound", "cone", 0.0, "W_a is nonconvex for D >= 4(2+mu)^2 csc^2(2a)")
def _cone_nonconvex_beyond_bound(params):
    cone = conical.ConeGeometry(math.pi / 8)
    beyond = params.with_diffusivity(conical.nonconvexity_bound(cone, params))
    theta_star = front_geometry.critical_angle(beyond)
    return 0.0 if cone.a < math.pi / 2 - theta_star else 1.0


@register_check("cone_reflection", "cone", 1e-12, "J_a is symmetric under the reflection across the bisector")
def _cone_reflection(params):
    single = params.with_diffusivity(params.D)
    cone = conical.ConeGeometry(math.pi / 6)
    worst = 0.0
    for radius, polar in ((1.0, 0.2), (2.5, 0.5), (0.7, 0.9)):
        x, y = radius * math.cos(polar), radius * math.sin(polar)
        rx, ry = conical.reflect(cone.a, x, y)
        worst = max(worst, abs(conical.solve_Ja(1.0, x, y, cone, single)
                               - conical.solve_Ja(1.0, rx, max(ry, 0.0), cone, single)))
    return worst


# === Simulation Checks ===
@register_check("simulation_speeds", "simulation", 0.10,
                "simulated front speeds along the normal and the road match the Hamilton-Jacobi speeds")
def _simulation_speeds(params):
    config = rd_simulator.SimulationConfig()
    result = rd_simulator.run_simulation(params.with_diffusivity(params.D), config, (0.0, math.pi / 2))
    worst = max(row["relative_error"] for row in rd_simulator.cross_validate(result))
    return worst, worst <= 0.10 and result.maximum_principle_holds


# === Runner ===
def _run_check(entry, params):
    name, group, tolerance, reference, func = entry
    try:
        outcome = func(params)
    except Exception as e:
        logging.error(f"Check {name} raised {type(e).__name__}: {str(e)}")
        return CheckResult(name=name, group=group, passed=False, measured=f"{type(e).__name__}: {e}",
                           tolerance=tolerance, reference=reference)

    if isinstance(outcome, tuple):
        measured, passed = outcome
    else:
        measured = outcome
        passed = measured <= tolerance
    return CheckResult(name=name, group=group, passed=bool(passed), measured=float(measured),
                       tolerance=tolerance, reference=reference)


def run_verification(params, quick=False, groups=None):
    """
    Run the registered checks

    Args:
        params: ModelParams
        quick: Skip the simulation group
        groups: Restrict to these group names

    Returns:
        VerificationReport
    """
    selected = groups or GROUPS
    report = VerificationReport(params=params, quick=quick)
    for entry in _REGISTRY:
        group = entry[1]
        if group not in selected or (quick and group == "simulation"):
            continue
        result = _run_check(entry, params)
        report.checks.append(result)
        add_log_entry(f"{'PASS' if result.passed else 'FAIL'} {result.name}: measured {result.measured}")

    state.verification_reports.append(report.as_dict())
    if not report.passed:
        logging.warning(f"Verification failed: {[result.name for result in report.failures]}")
    return report
