"""Classical scattering: deflection laws, density transfer, and the flipper.

A repulsive central potential turns an incoming impact parameter s into an
outgoing polar deflection theta(s). That map carries a transverse source
density rho_a(s) into a solid-angle density rho_b(theta) with the exact
Jacobian

    rho_b(theta) = rho_a(s(theta)) * (s / sin theta) * |ds/dtheta|,

which is the dual, density-level route to the sampling pushforward in
:mod:`trajlab.core`; both are kept and cross-checked rather than collapsed.

The flipper is a statistically homogeneous medium of identical centers. A
trajectory flies straight between encounters and is deflected by theta(s) at
each one, so its speed never changes and each encounter is one trial of the
"which angular bin" experiment.

Polar deflections live in [0, pi]. A signed angle in (-pi, pi] is used only
for flipper outcome binning; the sign is the side of the encounter's impact
direction in a fixed frame perpendicular to the incoming ray, which is +/-
symmetric for isotropic scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import (
    ConfigurationPoint,
    Event,
    Experiment,
    MeasureSpec,
    Trajectory,
)
from .errors import IntegrationError

__all__ = [
    "Potential",
    "HardSphere",
    "RepulsivePower",
    "ScreenedCoulomb",
    "turning_radius",
    "deflection_angle",
    "DeflectionFunction",
    "transfer_density",
    "inverse_transfer_density",
    "isotropic_source_density",
    "transverse_mass",
    "solid_angle_mass",
    "FlipperScene",
    "random_scene",
    "trace_flipper",
    "FlipperTrajectory",
    "EncounterRecord",
    "AngleBinExperiment",
    "bin_edges",
    "entry_measure",
    "flipper_trajectory_builder",
    "flipper_cross_section",
]


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


class Potential:
    """Repulsive central potential V(r), decaying to 0 at infinity."""

    name = "potential"

    def __call__(self, r):
        raise NotImplementedError

    def derivative(self, r):
        raise NotImplementedError


@dataclass(frozen=True)
class HardSphere(Potential):
    """Impenetrable sphere: V = +inf inside ``radius``, 0 outside."""

    radius: float
    name = "hard-sphere"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.radius, np.inf, 0.0)

    def derivative(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class RepulsivePower(Potential):
    """V(r) = strength / r**exponent; exponent 1 is the inverse-square force."""

    strength: float
    exponent: float = 1.0
    name = "repulsive-power"

    def __post_init__(self):
        if self.strength <= 0 or self.exponent <= 0:
            raise ValueError("strength and exponent must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return self.strength / r ** self.exponent

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return -self.exponent * self.strength / r ** (self.exponent + 1.0)


@dataclass(frozen=True)
class ScreenedCoulomb(Potential):
    """V(r) = strength * exp(-r/screening_length) / r."""

    strength: float
    screening_length: float
    name = "screened-coulomb"

    def __post_init__(self):
        if self.strength <= 0 or self.screening_length <= 0:
            raise ValueError("strength and screening_length must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = self.strength * np.exp(-r / self.screening_length) / r
        return np.where(np.isfinite(r), v, 0.0)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        a = self.screening_length
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            d = -self.strength * np.exp(-r / a) * (1.0 / r ** 2 + 1.0 / (a * r))
        return np.where(np.isfinite(r), d, 0.0)


# ---------------------------------------------------------------------------
# single-center deflection
# ---------------------------------------------------------------------------


def turning_radius(potential: Potential, energy: float, s: float) -> float:
    """Distance of closest approach: largest root of 1 - (s/r)^2 - V(r)/E."""
    if energy <= 0:
        raise ValueError("energy must be positive")
    if s < 0:
        raise ValueError("impact parameter must be nonnegative")
    if isinstance(potential, HardSphere):
        return max(float(s), potential.radius)

    def radicand(r):
        val = 1.0 - float(potential(r)) / energy
        if s > 0:
            val -= (s / r) ** 2
        return val

    # for monotone repulsive V the radicand is increasing in r: bracket by doubling
    lo = max(s, 1e-12) * (1.0 + 1e-12) if s > 0 else 1e-12
    while radicand(lo) > 0:
        lo *= 0.5
        if lo < 1e-300:
            raise IntegrationError("failed to bracket turning point from below")
    hi = max(2.0 * lo, 2.0 * s, 1e-6)
    for _ in range(2000):
        if radicand(hi) > 0:
            break
        hi *= 2.0
    else:
        raise IntegrationError("failed to bracket turning point from above")
    return float(brentq(radicand, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=300))


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(n):
    if n not in _GL_CACHE:
        x, w = leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)  # map to [0, 1]
    return _GL_CACHE[n]


def _deflection_integral(potential, energy, s, n_nodes=256):
    """Quadrature of theta = pi - 2 s \\int_0^{u_max} du / sqrt(F(u)).

    The turning-point square-root singularity is removed by u =
    u_max*(1 - x^2), after which the integrand is smooth and Gauss-Legendre
    converges at machine precision for the shipped potentials.
    """
    if s == 0.0:
        return math.pi
    r_min = turning_radius(potential, energy, s)
    u_max = 1.0 / r_min
    x, w = _gl_nodes(n_nodes)
    u = u_max * (1.0 - x * x)
    with np.errstate(divide="ignore"):
        r = np.where(u > 0, 1.0 / u, np.inf)
    F = 1.0 - (s * u) ** 2 - np.asarray(potential(r), dtype=float) / energy
    F = np.maximum(F, 0.0)
    if np.any(F <= 0):
        raise IntegrationError("radicand vanished at an interior node")
    integral = float(np.sum(w * x / np.sqrt(F)))
    theta = math.pi - 4.0 * s * u_max * integral
    return min(max(theta, 0.0), math.pi)


def _deflection_ode(potential, energy, s, r_start=None, rtol=1e-11,
                    atol=1e-13):
    """Deflection from integrating the planar equations of motion.

    Intended for short-range potentials where a finite start/exit radius
    captures the whole interaction; the quadrature path is preferred for
    slowly decaying tails.
    """
    mass = 1.0
    v0 = math.sqrt(2.0 * energy / mass)
    if r_start is None:
        # quiet radius: tail energy below integrator tolerance
        r_start = max(turning_radius(potential, energy, 0.0), s, 1e-6)
        for _ in range(200):
            if float(potential(r_start)) / energy < 1e-13:
                break
            r_start *= 1.5
        else:
            raise IntegrationError(
                "potential tail decays too slowly for the planar-motion "
                "path; use the quadrature method")
        r_start *= 1.5
    if s >= r_start:
        return 0.0

    x0 = -math.sqrt(max(r_start ** 2 - s ** 2, 0.0))
    state0 = [x0, s, v0, 0.0]

    def rhs(t, y):
        x, yy, vx, vy = y
        r = math.hypot(x, yy)
        f = -float(potential.derivative(r)) / mass  # outward radial accel
        return [vx, vy, f * x / r, f * yy / r]

    def escaped(t, y):
        x, yy, vx, vy = y
        r = math.hypot(x, yy)
        return r - r_start * (1.0 + 1e-9) if (x * vx + yy * vy) > 0 else -1.0

    escaped.terminal = True
    escaped.direction = 1.0
    t_max = 10.0 * (2.0 * r_start / v0)
    # cap the step so the interaction region cannot be straddled unseen
    sol = solve_ivp(rhs, (0.0, t_max), state0, rtol=rtol, atol=atol,
                    method="DOP853", events=escaped, dense_output=False,
                    max_step=r_start / (30.0 * v0))
    if not sol.success or not len(sol.t_events[0]):
        raise IntegrationError("planar integration did not escape the potential")
    vx, vy = sol.y[2, -1], sol.y[3, -1]
    cosang = vx / math.hypot(vx, vy)
    return float(np.arccos(np.clip(cosang, -1.0, 1.0)))


def deflection_angle(potential: Potential, energy: float, s: float,
                     method: str = "auto", **kw) -> float:
    """Polar scattering angle theta(s) in [0, pi].

    Hard spheres use the reflection law theta = 2*arccos(s/R). Smooth
    potentials default to the deflection-integral quadrature; pass
    ``method="ode"`` to integrate the planar equations of motion instead
    (the two are cross-checked in the test suite).
    """
    if energy <= 0:
        raise ValueError("energy must be positive")
    if s < 0:
        raise ValueError("impact parameter must be nonnegative")
    if isinstance(potential, HardSphere):
        if s >= potential.radius:
            return 0.0
        return 2.0 * math.acos(s / potential.radius)
    if method in ("auto", "integral"):
        return _deflection_integral(potential, energy, s, **kw)
    if method == "ode":
        return _deflection_ode(potential, energy, s, **kw)
    raise ValueError(f"unknown method {method!r}")


class DeflectionFunction:
    """theta(s) for one (potential, energy), with inverse and derivative.

    The map is strictly decreasing for the shipped repulsive potentials;
    this is spot-checked on a grid at construction. The inverse is solved by
    bracketed root finding on the forward map (no table interpolation), so
    its accuracy is that of the quadrature.
    """

    def __init__(self, potential: Potential, energy: float,
                 method: str = "auto", check_monotone: bool = True):
        self.potential = potential
        self.energy = float(energy)
        self.method = method
        if isinstance(potential, HardSphere):
            self.s_max = potential.radius
        else:
            self.s_max = math.inf
        if check_monotone and not isinstance(potential, HardSphere):
            scale = turning_radius(potential, energy, 0.0)
            grid = scale * np.geomspace(0.05, 50.0, 24)
            th = [self(si) for si in grid]
            if np.any(np.diff(th) >= 0):
                raise IntegrationError(
                    "deflection function is not strictly decreasing")

    def __call__(self, s: float) -> float:
        return deflection_angle(self.potential, self.energy, s,
                                method=self.method)

    def inverse(self, theta: float) -> float:
        """Impact parameter with deflection ``theta`` in (0, pi)."""
        if not 0.0 < theta < math.pi:
            raise ValueError("theta must lie strictly inside (0, pi)")
        if isinstance(self.potential, HardSphere):
            # still solved numerically; the closed form is the test oracle
            lo, hi = 0.0, self.potential.radius
        else:
            scale = turning_radius(self.potential, self.energy, 0.0)
            lo = 1e-9 * scale
            if self(lo) < theta:
                raise IntegrationError(
                    f"theta={theta} out of reach (backscatter limit)")
            hi = scale
            for _ in range(200):
                if self(hi) < theta:
                    break
                hi *= 2.0
            else:
                raise IntegrationError("failed to bracket inverse deflection")
        f = lambda s: self(s) - theta
        return float(brentq(f, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=300))

    def ds_dtheta(self, theta: float, rel_step: float = 1e-6) -> float:
        """d s / d theta by central differences on the inverse."""
        h = rel_step * max(theta, math.pi - theta, 0.1)
        h = min(h, 0.49 * theta, 0.49 * (math.pi - theta))
        sp = self.inverse(theta + h)
        sm = self.inverse(theta - h)
        return (sp - sm) / (2.0 * h)


# ---------------------------------------------------------------------------
# density transfer (boundary statistics a -> b)
# ---------------------------------------------------------------------------


def transfer_density(source_density: Callable[[float], float],
                     deflection: DeflectionFunction,
                     theta_grid: np.ndarray) -> np.ndarray:
    """Exact-Jacobian transfer of a transverse density to solid angle.

    ``source_density(s)`` is the incoming density per transverse area
    (azimuthally symmetric); the result is the outgoing density per solid
    angle on ``theta_grid``, via rho_b = rho_a(s) * (s/sin theta) * |ds/dtheta|.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    out = np.empty_like(theta_grid)
    for i, th in enumerate(theta_grid):
        s = deflection.inverse(float(th))
        dsdth = deflection.ds_dtheta(float(th))
        out[i] = float(source_density(s)) * (s / math.sin(th)) * abs(dsdth)
    return out


def inverse_transfer_density(target_density: Callable[[float], float],
                             deflection: DeflectionFunction,
                             s_grid: np.ndarray,
                             dtheta_step: float = 1e-6) -> np.ndarray:
    """Pull a solid-angle density back to the transverse plane.

    Inverse Jacobian of :func:`transfer_density`; the round trip reproduces
    the source density (tested), which is what licenses using either route.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    out = np.empty_like(s_grid)
    for i, s in enumerate(s_grid):
        th = deflection(float(s))
        h = dtheta_step * max(1.0, s)
        dthds = (deflection(float(s) + h) - deflection(max(float(s) - h, 0.0))) \
            / (h + min(h, float(s)))
        out[i] = float(target_density(th)) * (math.sin(th) / s) * abs(dthds)
    return out


def isotropic_source_density(deflection: DeflectionFunction) -> Callable:
    """Transverse density whose transfer is uniform on the sphere.

    Returns rho_a with unit total mass: rho_a(s) = (sin theta / s) *
    |dtheta/ds| / (4 pi). For a hard sphere this is the uniform disk
    1/(pi R^2).
    """

    def rho_a(s: float) -> float:
        s = float(s)
        if s <= 0.0 or s >= deflection.s_max:
            return 0.0
        h = 1e-6 * max(1.0, s)
        lo = max(s - h, 1e-12)
        dthds = (deflection(s + h) - deflection(lo)) / (s + h - lo)
        th = deflection(s)
        return math.sin(th) / s * abs(dthds) / (4.0 * math.pi)

    return rho_a


def transverse_mass(density: Callable[[float], float], s_max: float,
                    n: int = 4096) -> float:
    """Total mass 2 pi \\int rho(s) s ds on (0, s_max]."""
    s = np.linspace(0.0, s_max, n)[1:]
    vals = np.array([float(density(si)) for si in s])
    return 2.0 * math.pi * float(np.trapezoid(vals * s, s))


def solid_angle_mass(density_on_grid: np.ndarray, theta_grid: np.ndarray) -> float:
    """Total mass 2 pi \\int rho(theta) sin theta dtheta on the grid."""
    theta_grid = np.asarray(theta_grid, dtype=float)
    vals = np.asarray(density_on_grid, dtype=float)
    return 2.0 * math.pi * float(np.trapezoid(vals * np.sin(theta_grid), theta_grid))


# ---------------------------------------------------------------------------
# the flipper: many centers, sequential encounters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EncounterRecord:
    path_length: float
    center_index: int
    impact_parameter: float
    theta: float
    theta_signed: float


class FlipperScene:
    """Periodic cubic cell of identical repulsive centers.

    The cell tiles space, realizing a statistically homogeneous medium large
    enough that every trajectory keeps encountering centers. Centers must
    keep a minimum mutual spacing of ``min_spacing_factor * action_range``
    (min-image metric), so encounters are isolated single-center scattering
    events.
    """

    def __init__(self, cell_size: float, centers: np.ndarray,
                 potential: Potential, energy: float, action_range: float,
                 min_spacing_factor: float = 10.0):
        centers = np.asarray(centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != 3:
            raise ValueError("centers must be an (N, 3) array")
        if cell_size <= 0 or action_range <= 0:
            raise ValueError("cell_size and action_range must be positive")
        if np.any(centers < 0) or np.any(centers >= cell_size):
            raise ValueError("centers must lie inside [0, cell_size)^3")
        L = float(cell_size)
        d = centers[:, None, :] - centers[None, :, :]
        d = (d + L / 2.0) % L - L / 2.0
        dist = np.sqrt((d ** 2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        d_min = float(dist.min()) if len(centers) > 1 else math.inf
        if d_min < min_spacing_factor * action_range:
            raise ValueError(
                f"minimum center spacing {d_min:.4g} violates the required "
                f"{min_spacing_factor} * action_range = "
                f"{min_spacing_factor * action_range:.4g}")
        self.cell_size = L
        self.centers = centers
        self.potential = potential
        self.energy = float(energy)
        self.action_range = float(action_range)
        self.min_spacing = d_min
        self.deflection = DeflectionFunction(potential, energy,
                                             check_monotone=False)
        # replicate centers whose action sphere pokes through a cell face,
        # so straight segments inside the cell see every reachable sphere
        r0 = self.action_range * (1.0 + 1e-9)
        images = [centers]
        shifts = np.array(np.meshgrid(*([[-L, 0.0, L]] * 3))).T.reshape(-1, 3)
        for sh in shifts:
            if not np.any(sh):
                continue
            img = centers + sh
            keep = np.all((img > -r0) & (img < L + r0), axis=1)
            if keep.any():
                images.append(img[keep])
        self.centers_ext = np.concatenate(images, axis=0)


def random_scene(n_centers: int, action_range: float, energy: float,
                 potential: Potential | None = None,
                 min_spacing_factor: float = 10.0,
                 packing: float = 0.5, seed: int = 0,
                 max_tries: int = 100_000) -> FlipperScene:
    """Random sequential placement of centers in a periodic cell.

    ``packing`` is n_centers * d_min^3 / cell volume; 0.5 leaves room for
    rejection sampling to finish quickly.
    """
    if potential is None:
        potential = HardSphere(action_range)
    d_min = min_spacing_factor * action_range
    L = (n_centers * d_min ** 3 / packing) ** (1.0 / 3.0)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    placed = np.empty((0, 3))
    tries = 0
    while len(placed) < n_centers:
        tries += 1
        if tries > max_tries:
            raise IntegrationError("center placement did not converge; "
                                   "lower packing or n_centers")
        cand = rng.random(3) * L
        if len(placed):
            d = (placed - cand + L / 2.0) % L - L / 2.0
            if np.min((d ** 2).sum(-1)) < d_min ** 2:
                continue
        placed = np.vstack([placed, cand])
    return FlipperScene(L, placed, potential, energy, action_range,
                        min_spacing_factor)


class FlipperTrajectory(Trajectory):
    """Unit-speed polyline through the scene with encounter events."""

    def __init__(self, vertices: np.ndarray, encounters: Sequence[EncounterRecord]):
        self.vertices = np.asarray(vertices, dtype=float)
        self.encounters = list(encounters)
        seg = np.diff(self.vertices, axis=0)
        self.lengths = np.sqrt((seg ** 2).sum(-1))
        self.times = np.concatenate([[0.0], np.cumsum(self.lengths)])

    @property
    def domain(self):
        return 0.0, float(self.times[-1])

    def evaluate(self, t):
        t = float(np.clip(t, 0.0, self.times[-1]))
        i = int(np.searchsorted(self.times, t, side="right") - 1)
        i = min(max(i, 0), len(self.vertices) - 2)
        h = self.times[i + 1] - self.times[i]
        w = 0.0 if h == 0 else (t - self.times[i]) / h
        return ConfigurationPoint((1 - w) * self.vertices[i] + w * self.vertices[i + 1])

    def events(self, horizon=None):
        enc = self.encounters if horizon is None else self.encounters[:horizon]
        return [Event(time=e.path_length, point=None, data=e) for e in enc]


def _signed_theta(theta: float, u: np.ndarray, impact_dir: np.ndarray) -> float:
    """Sign from the impact direction's azimuth in a fixed frame about u."""
    e1 = np.cross([0.0, 0.0, 1.0], u)
    if np.dot(e1, e1) < 1e-24:
        e1 = np.cross([1.0, 0.0, 0.0], u)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    phi = math.atan2(float(np.dot(impact_dir, e2)), float(np.dot(impact_dir, e1)))
    return theta if phi >= 0.0 else -theta


def trace_flipper(scene: FlipperScene, position, direction,
                  n_encounters: int,
                  max_path_length: float | None = None,
                  record_path: bool = True) -> FlipperTrajectory:
    """Integrate one trajectory through ``n_encounters`` encounters.

    Straight free flight, deflection by theta(s) at each closest approach,
    speed preserved exactly. Stops early (fewer encounters) if
    ``max_path_length`` is exhausted; callers exclude short trajectories via
    the trial-count floor. ``record_path=False`` keeps only encounter
    vertices (statistics unchanged, geometry coarse) for large ensembles.
    """
    L = scene.cell_size
    r0 = scene.action_range
    r0sq = r0 * r0
    pos = np.asarray(position, dtype=float) % L
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    if max_path_length is None:
        # a few mean free paths per requested encounter
        mfp = L ** 3 / max(len(scene.centers), 1) / (math.pi * r0sq)
        max_path_length = 20.0 * mfp * n_encounters
    centers = scene.centers_ext

    vertices = [pos.copy()]
    encounters: list[EncounterRecord] = []
    travelled = 0.0
    push = 1e-9 * L

    def face_params(uvec):
        # per-axis wall coordinate and inverse speed, fixed between
        # deflections; axes with no motion never meet a wall
        moving = uvec != 0
        tgt = np.where(uvec > 0, L, 0.0)
        inv = np.where(moving, 1.0 / np.where(moving, uvec, 1.0), 0.0)
        return tgt, inv, moving

    targets, inv_u, moving = face_params(u)

    while len(encounters) < n_encounters and travelled < max_path_length:
        t_bound = float(np.min(np.where(moving, (targets - pos) * inv_u,
                                        np.inf)))

        w = centers - pos
        t_ca = w @ u
        d2 = np.einsum("ij,ij->i", w, w) - t_ca * t_ca
        inside = d2 < r0sq
        if not inside.any():
            pos = (pos + (t_bound + push) * u) % L
            travelled += t_bound + push
            if record_path:
                vertices.append(pos.copy())
            continue
        idx = np.flatnonzero(inside)
        t_enter = t_ca[idx] - np.sqrt(r0sq - d2[idx])
        ok = (t_enter > push) & (t_enter <= t_bound)
        if not ok.any():
            pos = (pos + (t_bound + push) * u) % L
            travelled += t_bound + push
            if record_path:
                vertices.append(pos.copy())
            continue

        k = int(idx[ok][np.argmin(t_enter[ok])])
        tk = float(t_ca[k])
        x_ca = pos + tk * u
        travelled += tk
        beta = x_ca - centers[k]
        # impact offset perpendicular to u (remove roundoff component)
        beta -= np.dot(beta, u) * u
        s = float(np.linalg.norm(beta))
        if s < 1e-12 * r0:
            theta = math.pi
            n_hat = np.cross([0.0, 0.0, 1.0], u)
            if np.dot(n_hat, n_hat) < 1e-24:
                n_hat = np.cross([1.0, 0.0, 0.0], u)
            n_hat /= np.linalg.norm(n_hat)
        else:
            theta = scene.deflection(min(s, r0 * (1 - 1e-15)))
            n_hat = beta / s
        th_signed = _signed_theta(theta, u, n_hat)
        u_new = math.cos(theta) * u + math.sin(theta) * n_hat
        u_new /= np.linalg.norm(u_new)

        vertices.append(x_ca % L)
        encounters.append(EncounterRecord(
            path_length=travelled, center_index=k % len(scene.centers),
            impact_parameter=s, theta=theta, theta_signed=th_signed))

        # leave the action sphere along the new direction before searching on
        delta = x_ca - centers[k]
        b = float(np.dot(delta, u_new))
        t_leave = -b + math.sqrt(max(b * b + r0sq - float(np.dot(delta, delta)), 0.0))
        pos = (x_ca + (t_leave + push) * u_new) % L
        travelled += t_leave + push
        u = u_new
        targets, inv_u, moving = face_params(u)
        if record_path:
            vertices.append(pos.copy())

    if not record_path:
        vertices.append(pos.copy())
    return FlipperTrajectory(np.asarray(vertices), encounters)


def bin_edges(n_bins: int) -> np.ndarray:
    """Edges of the n equal outcome bins partitioning (-pi, pi]."""
    return -math.pi + 2.0 * math.pi * np.arange(n_bins + 1) / n_bins


class AngleBinExperiment(Experiment):
    """Outcome i iff the signed encounter angle falls in bin i of (-pi, pi]."""

    def __init__(self, n_bins: int):
        self.edges = bin_edges(n_bins)
        width = 2.0 * math.pi / n_bins

        def classify(ev):
            th = ev.data.theta_signed
            i = int(math.floor((th + math.pi) / width))
            return min(max(i, 0), n_bins - 1)

        super().__init__(n_outcomes=n_bins, classify=classify,
                         name=f"angle-bins({n_bins})")


def entry_measure(scene: FlipperScene) -> MeasureSpec:
    """Uniform entry point in the cell, isotropic direction (6-vector)."""

    L = scene.cell_size

    def sampler(rng, n):
        pos = rng.random((n, 3)) * L
        vec = rng.normal(size=(n, 3))
        vec /= np.linalg.norm(vec, axis=1, keepdims=True)
        return np.concatenate([pos, vec], axis=1)

    return MeasureSpec(dimension=6, sampler=sampler, density=None,
                       total_mass=1.0, name="flipper-entry")


def flipper_trajectory_builder(scene: FlipperScene, n_encounters: int,
                               max_path_length: float | None = None,
                               record_path: bool = False):
    """Builder for :func:`trajlab.core.ensemble_statistics`."""

    def build(point):
        return trace_flipper(scene, point[:3], point[3:6], n_encounters,
                             max_path_length, record_path=record_path)

    return build


def cross_sections_from_rates(rates: np.ndarray, action_range: float) -> np.ndarray:
    """Per-outcome cross sections sigma_i = f_i * pi * r0^2."""
    return np.asarray(rates, dtype=float) * math.pi * action_range ** 2


@dataclass(frozen=True)
class FlipperResult:
    """Ensemble rate statistics plus the cross sections they normalise to."""

    stats: "RateStatistics"
    cross_sections: np.ndarray
    n_outcomes: int


def flipper_cross_section(scene: FlipperScene, source_measure=None,
                          n_outcomes: int = 8, n_traj: int = 1000,
                          n_min_trials: int = 1, seed: int = 0,
                          n_encounters: int = 20,
                          max_path_length: float | None = None) -> FlipperResult:
    """Binned encounter rates over an ensemble, scaled to cross sections.

    Draws entry states from ``source_measure`` (isotropic over the cell by
    default), integrates each trajectory through ``n_encounters``
    encounters, classifies every signed deflection into ``n_outcomes``
    equal angle bins, and reports mean rates, their spread, and the
    per-bin cross sections ``f_i * pi * r0^2``. Trajectories with fewer
    than ``n_min_trials`` encounters are excluded from the statistics.
    """
    from .core import ensemble_statistics

    if source_measure is None:
        source_measure = entry_measure(scene)
    stats = ensemble_statistics(
        source_measure,
        flipper_trajectory_builder(scene, n_encounters, max_path_length),
        AngleBinExperiment(n_outcomes),
        n_trajectories=n_traj, n_min_trials=n_min_trials, seed=seed)
    sigma = cross_sections_from_rates(stats.mean, scene.action_range)
    return FlipperResult(stats=stats, cross_sections=sigma,
                         n_outcomes=n_outcomes)
