"""
rd_simulator.py - Explicit finite-difference simulation of the road-field system

Field:  V_t = Laplacian V + V(1 - V)            on y > 0
Road:   U_t = D U_xx + nu V(x, 0) - mu U        on y = 0
Exchange at the road: -V_y = kappa (mu U - nu V)

The grid is node-centred on [-Lx, Lx] x [0, Ly] with spacing h, the road
row being j = 0. The Robin condition uses a ghost row below the road,
V_ghost = V_row1 + 2 h kappa (mu U - nu V_row0), which is eliminated into
a Neumann Laplacian plus the source 2 kappa (mu U - nu V_row0)/h on the
road row. Far boundaries are homogeneous Neumann, guarded so the front
never reaches them.

Cone mode keeps the grid but masks the nodes outside the sector of
opening 2a; masked neighbours are replaced by the centre value (zero
flux). The second road Gamma_a carries its own 1-D density U_tilde on
nodes s_k = k h along the ray, coupled to the nearest field node of each
ray node. The node at the corner gets the average of both couplings.
"""

import math
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.stats import linregress

from conical import ConeGeometry, cone_speed, unequal_diffusion_speed_bounds
from front_geometry import ANGLE_TOLERANCE, KPP_SPEED, directional_speed
from utils import BoundaryProximityError, add_log_entry

STABILITY_SAFETY = 0.9
FRONT_LEVEL = 0.5
MIN_HISTORY_POINTS = 10
BOUND_SLACK = 1e-12
PROGRESS_STEPS = 10
GUARD_CELLS = 5


@dataclass(frozen=True)
class SimulationConfig:
    """Desk-scale run configuration"""
    h: float = 0.2
    Lx: float = 160.0
    Ly: float = 100.0
    t_max: float = 40.0
    r0: float = 1.0
    level: float = FRONT_LEVEL
    record_interval: float = 0.5
    cone_a: float = None
    decouple_road: bool = False
    guard_cells: int = GUARD_CELLS


@dataclass(frozen=True)
class ConeStencil:
    """Precomputed masks and couplings for cone mode"""
    inside: np.ndarray          # (Nx, Ny) nodes in the closed sector
    neighbour_inside: tuple     # (east, west, north, south) masks
    road_inside: np.ndarray     # (Nx,) Gamma_0 nodes with x >= 0
    road_neighbour_inside: tuple
    ray_cells: tuple            # (i_k, j_k) field node nearest each ray node
    corner: tuple               # (i, j) of the origin node
    direction: tuple            # unit vector along Gamma_a


@dataclass(frozen=True, eq=False)
class RDState:
    """
    Discrete state of the road-field system

    V has shape (Nx, Ny) over x_i = -Lx + i h, y_j = j h; U lives on the
    road row. U_tilde and stencil are set in cone mode only.
    """
    V: np.ndarray
    U: np.ndarray
    h: float
    dt: float
    t: float
    params: object
    Lx: float
    Ly: float
    U_tilde: np.ndarray = None
    cone_a: float = None
    decouple_road: bool = False
    stencil: ConeStencil = field(default=None, repr=False)

    @property
    def x(self):
        return -self.Lx + self.h * np.arange(self.V.shape[0])

    @property
    def y(self):
        return self.h * np.arange(self.V.shape[1])

    def node_index(self, x, y):
        """Indices of the grid node nearest (x, y)"""
        i = int(round((x + self.Lx) / self.h))
        j = int(round(y / self.h))
        return min(max(i, 0), self.V.shape[0] - 1), min(max(j, 0), self.V.shape[1] - 1)

    def field_value(self, x, y):
        return float(self.V[self.node_index(x, y)])

    def road_value(self, x):
        return float(self.U[self.node_index(x, 0.0)[0]])


# === Construction ===
def stable_time_step(params, h):
    """
    Largest safe explicit step, scaled by 0.9

    Satisfies dt <= h^2/(4 max(1, D, D_tilde)) and keeps the coefficient
    of V on the road row nonnegative, which gives the discrete maximum
    principle.
    """
    diffusivity = max(1.0, params.D, params.D_tilde or 0.0)
    diffusive = h * h / (4.0 * diffusivity)
    robin = 1.0 / (4.0 / (h * h) + 2.0 * params.kappa * params.nu / h + 1.0)
    return STABILITY_SAFETY * min(diffusive, robin)


def _neighbour_masks(inside):
    # off-grid neighbours keep the reflected value: Neumann far boundaries, Robin ghost row
    padded = np.pad(inside, 1, mode="constant", constant_values=True)
    return (padded[2:, 1:-1], padded[:-2, 1:-1], padded[1:-1, 2:], padded[1:-1, :-2])


def build_cone_stencil(a, x, y, h):
    X, Y = np.meshgrid(x, y, indexing="ij")
    polar = np.arctan2(Y, X)
    inside = (polar <= 2.0 * a + 1e-12) & (polar >= -1e-12)
    corner = (int(round(-x[0] / h)), 0)
    inside[corner] = True

    road_inside = x >= -1e-9
    road_padded = np.pad(road_inside, 1, mode="constant", constant_values=True)

    direction = (math.cos(2.0 * a), math.sin(2.0 * a))
    Lx = -x[0]
    reach_x = math.inf if abs(direction[0]) < 1e-15 else Lx / abs(direction[0])
    reach_y = math.inf if direction[1] < 1e-15 else y[-1] / direction[1]
    count = int(math.floor(min(reach_x, reach_y) / h)) + 1

    cells_i, cells_j = [], []
    for k in range(count):
        px, py = k * h * direction[0], k * h * direction[1]
        i0 = int(round((px + Lx) / h))
        j0 = int(round(py / h))
        best, best_distance = None, math.inf
        for i in range(max(i0 - 1, 0), min(i0 + 2, len(x))):
            for j in range(max(j0 - 1, 0), min(j0 + 2, len(y))):
                if inside[i, j]:
                    distance = math.hypot(x[i] - px, y[j] - py)
                    if distance < best_distance:
                        best, best_distance = (i, j), distance
        if best is None:
            raise ValueError(f"No sector node near ray node {k} for a={a}")
        cells_i.append(best[0])
        cells_j.append(best[1])

    return ConeStencil(inside=inside, neighbour_inside=_neighbour_masks(inside),
                       road_inside=road_inside,
                       road_neighbour_inside=(road_padded[2:], road_padded[:-2]),
                       ray_cells=(np.array(cells_i), np.array(cells_j)),
                       corner=corner, direction=direction)


def init_state(params, Lx, Ly, h, r0, cone_a=None, decouple_road=False):
    """
    Half-disk of invaded field with an invaded road segment

    V = 1 on the half-disk of radius r0, U = nu/mu on |x| <= r0, zero
    elsewhere. In cone mode the data are restricted to the sector and
    U_tilde = nu/mu on the first r0 of Gamma_a.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if r0 < 2.0 * h:
        raise ValueError(f"r0={r0} must be at least 2h={2.0 * h}")
    if Lx < 10.0 * r0 or Ly < 10.0 * r0:
        raise ValueError(f"Domain [{-Lx}, {Lx}] x [0, {Ly}] must extend at least 10 r0 = {10.0 * r0}")

    Nx = int(round(2.0 * Lx / h)) + 1
    Ny = int(round(Ly / h)) + 1
    x = -Lx + h * np.arange(Nx)
    y = h * np.arange(Ny)
    X, Y = np.meshgrid(x, y, indexing="ij")

    V = np.where(X * X + Y * Y <= r0 * r0, 1.0, 0.0)
    U = np.where(np.abs(x) <= r0, params.road_equilibrium, 0.0)

    stencil, U_tilde = None, None
    if cone_a is not None:
        stencil = build_cone_stencil(cone_a, x, y, h)
        V = np.where(stencil.inside, V, 0.0)
        U = np.where(stencil.road_inside, U, 0.0)
        s = h * np.arange(len(stencil.ray_cells[0]))
        U_tilde = np.where(s <= r0, params.road_equilibrium, 0.0)

    dt = stable_time_step(params, h)
    add_log_entry(f"Initialized {Nx}x{Ny} grid, h={h}, dt={dt:.3e}"
                  + (f", cone a={cone_a:.4f}" if cone_a is not None else ""))
    return RDState(V=V, U=U, h=h, dt=dt, t=0.0, params=params, Lx=Lx, Ly=Ly,
                   U_tilde=U_tilde, cone_a=cone_a, decouple_road=decouple_road, stencil=stencil)


# === Time Stepping ===
def _second_difference(values, neighbour_inside=None):
    """Neumann 1-D second difference (times h^2)"""
    padded = np.pad(values, 1, mode="reflect")
    east, west = padded[2:], padded[:-2]
    if neighbour_inside is not None:
        east = np.where(neighbour_inside[0], east, values)
        west = np.where(neighbour_inside[1], west, values)
    return east + west - 2.0 * values


def _laplacian(V, h, stencil=None):
    padded = np.pad(V, 1, mode="reflect")
    neighbours = [padded[2:, 1:-1], padded[:-2, 1:-1], padded[1:-1, 2:], padded[1:-1, :-2]]
    if stencil is not None:
        neighbours = [np.where(mask, values, V)
                      for mask, values in zip(stencil.neighbour_inside, neighbours)]
    return (sum(neighbours) - 4.0 * V) / (h * h)


def step(state, guard_cells=GUARD_CELLS):
    """
    Advance one explicit Euler step; returns a new RDState

    guard_cells=0 disables the far-boundary guard.

    Raises:
        BoundaryProximityError: if V >= 0.5 within guard_cells nodes of a far boundary
    """
    params, h, dt = state.params, state.h, state.dt
    V, U = state.V, state.U
    stencil = state.stencil
    coupling = 0.0 if state.decouple_road else params.kappa

    source = np.zeros_like(V)
    road_exchange = coupling * (params.mu * U - params.nu * V[:, 0])
    source[:, 0] = 2.0 * road_exchange / h

    U_tilde_new = None
    if stencil is not None:
        source[:, 0] = np.where(stencil.road_inside, source[:, 0], 0.0)
        cells = stencil.ray_cells
        V_ray = V[cells]
        ray_source = np.zeros_like(V)
        np.add.at(ray_source, cells, coupling * (params.mu * state.U_tilde - params.nu * V_ray) / h)
        ci, cj = stencil.corner
        averaged = 0.5 * (source[ci, cj] + ray_source[ci, cj])
        source += ray_source
        source[ci, cj] = averaged

        D_ray = params.D_tilde or params.D
        U_tilde = state.U_tilde
        U_tilde_new = U_tilde + dt * (D_ray * _second_difference(U_tilde) / (h * h)
                                      + params.nu * V_ray - params.mu * U_tilde)

    V_new = V + dt * (_laplacian(V, h, stencil) + source + V * (1.0 - V))

    road_neighbours = stencil.road_neighbour_inside if stencil is not None else None
    U_new = U + dt * (params.D * _second_difference(U, road_neighbours) / (h * h)
                      + params.nu * V[:, 0] - params.mu * U)
    if stencil is not None:
        V_new = np.where(stencil.inside, V_new, 0.0)
        U_new = np.where(stencil.road_inside, U_new, 0.0)

    new_state = replace(state, V=V_new, U=U_new, U_tilde=U_tilde_new, t=state.t + dt)
    if guard_cells > 0:
        _guard_far_boundaries(new_state, guard_cells)
    return new_state


def _guard_far_boundaries(state, cells=GUARD_CELLS, level=FRONT_LEVEL):
    V, U = state.V, state.U
    road_level = level * state.params.road_equilibrium
    near_field = max(V[:cells, :].max(), V[-cells:, :].max(), V[:, -cells:].max())
    near_road = max(U[:cells].max(), U[-cells:].max())
    near_ray = state.U_tilde[-cells:].max() if state.U_tilde is not None else 0.0
    if near_field >= level or near_road >= road_level or near_ray >= road_level:
        raise BoundaryProximityError(
            f"Front within {cells} nodes of a far boundary at t={state.t:.3f}; enlarge Lx/Ly")


# === Front Extraction ===
def _last_crossing(radii, values, level):
    above = np.nonzero(values >= level)[0]
    if len(above) == 0:
        return None
    k = above[-1]
    if k == len(values) - 1:
        return float(radii[k])
    drop = values[k] - values[k + 1]
    fraction = (values[k] - level) / drop if drop > 0 else 0.0
    return float(radii[k] + fraction * (radii[k + 1] - radii[k]))


def extract_front(state, theta, level=FRONT_LEVEL):
    """
    Largest radius along direction theta where the density reaches level

    theta is measured from the y-axis. Along the roads the road density
    is compared with level nu/mu. Returns None without a crossing.
    """
    road_level = level * state.params.road_equilibrium

    if state.cone_a is not None and abs(theta - (math.pi / 2 - 2.0 * state.cone_a)) <= ANGLE_TOLERANCE:
        s = state.h * np.arange(len(state.U_tilde))
        return _last_crossing(s, state.U_tilde, road_level)

    if abs(abs(theta) - math.pi / 2) <= ANGLE_TOLERANCE:
        x = state.x
        side = x >= 0 if theta > 0 else x <= 0
        radii, values = np.abs(x[side]), state.U[side]
        order = np.argsort(radii)
        return _last_crossing(radii[order], values[order], road_level)

    interpolator = RegularGridInterpolator((state.x, state.y), state.V,
                                           bounds_error=False, fill_value=0.0)
    sin_t, cos_t = math.sin(theta), math.cos(theta)
    reach = min(state.Lx / abs(sin_t) if abs(sin_t) > 1e-15 else math.inf,
                state.Ly / cos_t if cos_t > 1e-15 else math.inf)
    radii = np.arange(0.0, reach, state.h / 2.0)
    points = np.column_stack([radii * sin_t, radii * cos_t])
    return _last_crossing(radii, interpolator(points), level)


# === Runs ===
@dataclass(frozen=True)
class SpeedEstimate:
    theta: float
    speed: float
    intercept: float
    residual: float
    points: int


def estimate_speed(history, theta):
    """
    Least-squares front speed over the second half of the run

    Args:
        history: Rows (t, theta, radius); rows with radius None are ignored
        theta: Direction to fit

    Returns:
        SpeedEstimate with the RMS residual as a convergence diagnostic
    """
    rows = [(t, r) for t, angle, r in history
            if r is not None and abs(angle - theta) <= ANGLE_TOLERANCE]
    if not rows:
        raise ValueError(f"No front history for theta={theta}")
    t_max = max(t for t, _ in rows)
    window = [(t, r) for t, r in rows if t >= t_max / 2.0]
    if len(window) < MIN_HISTORY_POINTS:
        raise ValueError(f"Need at least {MIN_HISTORY_POINTS} history points, got {len(window)}")

    times = np.array([t for t, _ in window])
    radii = np.array([r for _, r in window])
    fit = linregress(times, radii)
    residual = float(np.sqrt(np.mean((radii - (fit.intercept + fit.slope * times)) ** 2)))
    return SpeedEstimate(theta=theta, speed=float(fit.slope), intercept=float(fit.intercept),
                         residual=residual, points=len(window))


@dataclass(frozen=True, eq=False)
class SimulationResult:
    params: object
    config: SimulationConfig
    thetas: tuple
    history: tuple              # (t, theta, radius)
    final_state: RDState
    bounds: dict                # extremes of V, U, U_tilde over the run
    steps: int

    @property
    def maximum_principle_holds(self):
        upper_road = self.params.road_equilibrium + BOUND_SLACK
        b = self.bounds
        return (b["V_min"] >= -BOUND_SLACK and b["V_max"] <= 1.0 + BOUND_SLACK
                and b["U_min"] >= -BOUND_SLACK and b["U_max"] <= upper_road
                and b["U_tilde_min"] >= -BOUND_SLACK and b["U_tilde_max"] <= upper_road)


def _update_bounds(bounds, state):
    bounds["V_min"] = min(bounds["V_min"], float(state.V.min()))
    bounds["V_max"] = max(bounds["V_max"], float(state.V.max()))
    bounds["U_min"] = min(bounds["U_min"], float(state.U.min()))
    bounds["U_max"] = max(bounds["U_max"], float(state.U.max()))
    if state.U_tilde is not None:
        bounds["U_tilde_min"] = min(bounds["U_tilde_min"], float(state.U_tilde.min()))
        bounds["U_tilde_max"] = max(bounds["U_tilde_max"], float(state.U_tilde.max()))


def run_simulation(params, config, thetas):
    """
    Evolve from the half-disk initial data to config.t_max, recording fronts

    Returns:
        SimulationResult with front history every record_interval
    """
    state = init_state(params, config.Lx, config.Ly, config.h, config.r0,
                       cone_a=config.cone_a, decouple_road=config.decouple_road)
    thetas = tuple(float(theta) for theta in thetas)
    bounds = {"V_min": 0.0, "V_max": 0.0, "U_min": 0.0, "U_max": 0.0,
              "U_tilde_min": 0.0, "U_tilde_max": 0.0}
    _update_bounds(bounds, state)

    total_steps = int(math.ceil(config.t_max / state.dt))
    history = []
    next_record = 0.0
    progress_every = max(1, total_steps // PROGRESS_STEPS)

    for n in range(total_steps + 1):
        if state.t >= next_record - 0.5 * state.dt:
            history.extend((state.t, theta, extract_front(state, theta, config.level)) for theta in thetas)
            next_record += config.record_interval
        if n == total_steps:
            break
        state = step(state, config.guard_cells)
        _update_bounds(bounds, state)
        if n % progress_every == 0:
            add_log_entry(f"Simulation t={state.t:.2f}/{config.t_max} "
                          f"(V in [{bounds['V_min']:.3g}, {bounds['V_max']:.3g}])", debug_only=True)

    add_log_entry(f"Simulation finished after {total_steps} steps at t={state.t:.3f}")
    return SimulationResult(params=params, config=config, thetas=thetas, history=tuple(history),
                            final_state=state, bounds=bounds, steps=total_steps)


def cross_validate(result):
    """
    Compare simulated front speeds with the Hamilton-Jacobi predictions

    In a cone with D_tilde != D only bounds are known; the midpoint is used.

    Returns:
        list: dicts with theta, simulated, predicted, relative_error
    """
    rows = []
    for theta in result.thetas:
        estimate = estimate_speed(result.history, theta)
        params = result.params
        cone = ConeGeometry(result.config.cone_a) if result.config.cone_a is not None else None
        if cone is not None and params.D_tilde not in (None, params.D):
            bounds = unequal_diffusion_speed_bounds(theta, cone, params, force=True)
            predicted = 0.5 * (bounds.lower + bounds.upper)
        elif cone is not None:
            predicted = cone_speed(theta, cone, params.with_diffusivity(params.D))
        elif result.config.decouple_road:
            predicted = KPP_SPEED
        else:
            predicted = directional_speed(theta, params)
        rows.append({
            "theta": theta,
            "simulated": estimate.speed,
            "predicted": predicted,
            "relative_error": abs(estimate.speed - predicted) / predicted,
            "residual": estimate.residual,
        })
        logging.info(f"theta={theta:.4f}: simulated {estimate.speed:.4f}, predicted {predicted:.4f}")
    return rows
