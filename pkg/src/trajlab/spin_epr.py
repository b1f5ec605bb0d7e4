"""Spin-carrying trajectories in magnetic fields, and two-particle statistics.

The spin here is a dynamical variable attached to a trajectory, a unit ray
in C^2, not a quantum state. In a field region it snaps instantaneously to
one of the two eigenrays of sigma.B, with the sign left open: both signs
give allowed trajectories, so a beam entering a field region branches. The
branch choice is where indeterminism enters; measures over branches (not
dynamics) carry the statistics.

A Stern-Gerlach device is modelled as a uniform-gradient slab: field
(B0 + g z) along a fixed transverse axis inside, zero outside. The force
on an aligned branch is -(sign) mu grad|B|, constant inside the slab, and
the field steps at the slab faces act as longitudinal potential kicks, so
total energy (kinetic plus (sign) mu |B|) is conserved exactly across the
boundaries.

Pair statistics live on a 16-cell measure over (setting A, result A,
setting B, result B). Conditional probabilities are ratios of cell masses.
The singlet weights reproduce the quantum correlator -a.b; deterministic
per-setting assignments cannot exceed |S| = 2 in the four-correlator
combination, while the singlet weights reach 2 sqrt 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Sequence

import numpy as np

from .core import Event, ConfigurationPoint, PiecewiseTrajectory, Segment
from .errors import IntegrationError, UnconditionedSettingError, ZeroFieldError

__all__ = [
    "SIGMA_X", "SIGMA_Y", "SIGMA_Z", "PAULI",
    "SpinVariable", "PhysicalConstants", "FieldMap", "SGDevice", "EPRSettings",
    "spin_lagrangian", "align_spin", "propagate_sg", "branch_weights",
    "validate_field_map",
    "singlet_measure", "global_epr_measure", "epr_conditional_probabilities",
    "correlator", "chsh_value", "planar_setting", "chsh_optimal_angles",
    "cells_from_outcomes", "sample_epr_counts", "chsh_estimate",
    "deterministic_strategies", "chsh_of_strategy",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


@dataclass(frozen=True)
class SpinVariable:
    """Unit ray in C^2 riding along a trajectory; global phase irrelevant."""

    components: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.components, dtype=complex)
        if arr.shape != (2,):
            raise ValueError(f"spin variable needs 2 complex components, got {arr.shape}")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"spin variable must be unit norm, got |s| = {norm!r}")
        object.__setattr__(self, "components", arr)

    def overlap(self, other: "SpinVariable") -> complex:
        return complex(np.vdot(self.components, other.components))

    def same_ray(self, other: "SpinVariable", tol: float = 1e-12) -> bool:
        return abs(abs(self.overlap(other)) - 1.0) < tol

    def expectation(self, operator: np.ndarray) -> float:
        s = self.components
        return float(np.real(np.vdot(s, operator @ s)))


@dataclass(frozen=True)
class PhysicalConstants:
    """Moment and mass; everything else enters only through mu."""

    mu: float
    m: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not (math.isfinite(self.m) and self.m > 0):
            raise ValueError(f"m must be positive, got {self.m}")


@dataclass(frozen=True)
class FieldMap:
    """A field and the gradient of its magnitude, both as position maps."""

    B: Callable[[np.ndarray], np.ndarray]
    grad_abs_B: Callable[[np.ndarray], np.ndarray]


def validate_field_map(fmap: FieldMap, points, rel_tol: float = 1e-4,
                       step: float = 1e-6) -> None:
    """Check grad_abs_B against central differences of |B| where B != 0."""
    for p in np.atleast_2d(np.asarray(points, dtype=float)):
        b = np.asarray(fmap.B(p), dtype=float)
        mag = float(np.linalg.norm(b))
        if mag == 0.0:
            continue
        fd = np.empty(3)
        for k in range(3):
            dp = np.zeros(3)
            dp[k] = step
            fd[k] = (np.linalg.norm(fmap.B(p + dp))
                     - np.linalg.norm(fmap.B(p - dp))) / (2 * step)
        g = np.asarray(fmap.grad_abs_B(p), dtype=float)
        scale = max(float(np.linalg.norm(g)), mag, 1e-30)
        if float(np.linalg.norm(g - fd)) > rel_tol * scale:
            raise ValueError(
                f"grad_abs_B disagrees with finite differences at {p}: "
                f"{g} vs {fd}")


@dataclass(frozen=True)
class SGDevice:
    """Uniform-gradient slab between two planes normal to the beam axis x.

    Inside entry_x <= x <= exit_x the field is (base_field + gradient * u)
    along ``orientation``, with u the position component along that axis;
    outside it is zero. ``screen_x`` is the detection plane downstream.
    """

    entry_x: float
    exit_x: float
    base_field: float
    gradient: float
    orientation: np.ndarray = dataclass_field(
        default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    screen_x: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.orientation, dtype=float)
        if u.shape != (3,):
            raise ValueError("orientation must be a 3-vector")
        n = float(np.linalg.norm(u))
        if n == 0:
            raise ValueError("orientation must be nonzero")
        u = u / n
        if abs(u[0]) > 1e-12:
            raise ValueError("orientation must be perpendicular to the beam axis x")
        object.__setattr__(self, "orientation", u)
        if not self.exit_x > self.entry_x:
            raise ValueError(f"exit plane {self.exit_x} must lie beyond entry "
                             f"plane {self.entry_x}")
        if self.base_field <= 0:
            raise ValueError("base_field must be positive inside the slab")
        if self.screen_x == 0.0:
            object.__setattr__(self, "screen_x",
                               self.exit_x + (self.exit_x - self.entry_x))
        if self.screen_x < self.exit_x:
            raise ValueError("screen must sit at or beyond the exit plane")

    @property
    def length(self) -> float:
        return self.exit_x - self.entry_x

    def inside(self, position) -> bool:
        x = float(np.asarray(position, dtype=float)[0])
        return self.entry_x <= x <= self.exit_x

    def magnitude(self, position) -> float:
        """|B| at a position inside the slab (field is zero outside)."""
        p = np.asarray(position, dtype=float)
        if not self.inside(p):
            return 0.0
        return self.base_field + self.gradient * float(p @ self.orientation)

    def field_map(self) -> FieldMap:
        def b_of(p):
            p = np.asarray(p, dtype=float)
            if not self.inside(p):
                return np.zeros(3)
            return self.magnitude(p) * self.orientation

        def grad_of(p):
            p = np.asarray(p, dtype=float)
            if not self.inside(p):
                return np.zeros(3)
            return self.gradient * self.orientation

        return FieldMap(B=b_of, grad_abs_B=grad_of)


@dataclass(frozen=True)
class EPRSettings:
    """One chosen setting pair: an axis at each wing."""

    o_a: np.ndarray
    o_b: np.ndarray

    def __post_init__(self):
        for name in ("o_a", "o_b"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            n = float(np.linalg.norm(v))
            if abs(n - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit vector, |v| = {n!r}")
            object.__setattr__(self, name, v)


def spin_lagrangian(x_dot, x, s: SpinVariable, field: FieldMap,
                    constants: PhysicalConstants) -> float:
    """Kinetic term minus mu times the spin-projected field at x."""
    v = np.asarray(x_dot, dtype=float)
    b = np.asarray(field.B(np.asarray(x, dtype=float)), dtype=float)
    sv = s.components
    op = b[0] * SIGMA_X + b[1] * SIGMA_Y + b[2] * SIGMA_Z
    projected = float(np.real(np.vdot(sv, op @ sv))) / float(np.real(np.vdot(sv, sv)))
    return 0.5 * constants.m * float(v @ v) - constants.mu * projected


def align_spin(s_in: SpinVariable, B) -> tuple[SpinVariable, SpinVariable]:
    """Both eigenrays of sigma.B, largest eigenvalue first.

    The field fixes the axis; the sign is the branch choice left open by
    the dynamics, so both rays come back. A zero field constrains nothing
    and there is no alignment to perform; callers keep s_in in that case.
    """
    b = np.asarray(B, dtype=float)
    if b.shape != (3,):
        raise ValueError("B must be a 3-vector")
    mag = float(np.linalg.norm(b))
    if mag < 1e-150:
        raise ZeroFieldError(
            "no-alignment: a zero field imposes no constraint on the spin "
            "variable; it passes through unchanged, so keep the incoming ray")
    n = b / mag
    theta = math.atan2(math.hypot(n[0], n[1]), n[2])
    phi = math.atan2(n[1], n[0]) if (n[0] != 0.0 or n[1] != 0.0) else 0.0
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    s_plus = SpinVariable(np.array([c, s * complex(math.cos(phi), math.sin(phi))],
                                   dtype=complex))
    s_minus = SpinVariable(np.array([-s * complex(math.cos(phi), -math.sin(phi)), c],
                                    dtype=complex))
    return s_plus, s_minus


def branch_weights(weight_model: str, orientation,
                   psi: SpinVariable | None = None) -> tuple[float, float]:
    """Probabilities of the two branch signs for a device axis.

    "equal" splits evenly; "quantum" projects a supplied ray psi onto the
    axis eigenrays, p_plus = |<plus|psi>|^2 and p_minus its complement, so
    the two always sum to exactly one.
    """
    if weight_model == "equal":
        return 0.5, 0.5
    if weight_model == "quantum":
        if psi is None:
            raise ValueError("quantum weights need the ray psi")
        n = np.asarray(orientation, dtype=float)
        s_plus, _ = align_spin(psi, n)
        p_plus = abs(complex(np.vdot(s_plus.components, psi.components))) ** 2
        p_plus = min(max(p_plus, 0.0), 1.0)
        return p_plus, 1.0 - p_plus
    raise ValueError(f"unknown weight model {weight_model!r}; "
                     f"use 'equal' or 'quantum'")


def _entry_speed(v_x: float, sign: int, mu: float, m: float, mag: float) -> float:
    """Longitudinal speed just inside a potential step of height sign*mu*mag."""
    arg = v_x * v_x - sign * 2.0 * mu * mag / m
    if arg <= 0:
        raise IntegrationError(
            "beam kinetic energy along the axis is below the entry potential "
            "step; the branch cannot enter the slab")
    return math.sqrt(arg)


def propagate_sg(position, velocity, s_in: SpinVariable, device: SGDevice,
                 constants: PhysicalConstants) -> tuple[PiecewiseTrajectory, PiecewiseTrajectory]:
    """Both branch trajectories through a slab device.

    Straight line to the entry plane (shared exactly by the branches),
    constant transverse force -(sign) mu g inside with the matching
    longitudinal kicks at the faces, straight line out to the screen
    plane. Branch ids are "+" and "-".
    """
    r0 = np.asarray(position, dtype=float).copy()
    v0 = np.asarray(velocity, dtype=float).copy()
    if r0.shape != (3,) or v0.shape != (3,):
        raise ValueError("position and velocity must be 3-vectors")
    if r0[0] >= device.entry_x:
        raise ValueError("initial state must sit in the field-free source "
                         "region before the entry plane")
    if v0[0] <= 0:
        raise ValueError("beam must move toward the device (v_x > 0)")

    mu, m = constants.mu, constants.m
    u_hat = device.orientation
    g = device.gradient
    t_entry = (device.entry_x - r0[0]) / v0[0]
    r_entry = r0 + v0 * t_entry
    mag_entry = device.base_field + g * float(r_entry @ u_hat)
    if mag_entry <= 0:
        raise IntegrationError(
            "field magnitude is not positive where the beam enters the slab; "
            "the aligned-branch picture needs a nonvanishing field")
    # alignment happens at the entry plane; the rays are fixed by the axis
    s_plus, s_minus = align_spin(s_in, mag_entry * u_hat)

    branches = []
    t_exit_latest = 0.0
    specs = []
    for sign, label, s_ray in ((+1, "+", s_plus), (-1, "-", s_minus)):
        v_long = _entry_speed(v0[0], sign, mu, m, mag_entry)
        v_in = v0.copy()
        v_in[0] = v_long
        accel = -sign * (mu * g / m) * u_hat
        tau = device.length / v_long
        r_exit = r_entry + v_in * tau + 0.5 * accel * tau * tau
        v_exit_inside = v_in + accel * tau
        mag_exit = device.base_field + g * float(r_exit @ u_hat)
        if mag_exit <= 0:
            raise IntegrationError(
                "field magnitude crossed zero inside the slab; shrink the "
                "gradient or shift the beam")
        # the slab interior never sees |B| <= 0 between entry and exit:
        # u(t) is quadratic with constant curvature, check its minimum
        u_entry = float(r_entry @ u_hat)
        du = float(v_in @ u_hat)
        a_u = float(accel @ u_hat)
        if a_u != 0.0:
            t_star = -du / a_u
            if 0.0 < t_star < tau:
                u_star = u_entry + du * t_star + 0.5 * a_u * t_star * t_star
                if device.base_field + g * u_star <= 0:
                    raise IntegrationError(
                        "field magnitude crossed zero inside the slab; "
                        "shrink the gradient or shift the beam")
        v_out = v_exit_inside.copy()
        v_out[0] = math.sqrt(v_exit_inside[0] ** 2 + sign * 2.0 * mu * mag_exit / m)
        t_exit = t_entry + tau
        t_screen = t_exit + (device.screen_x - device.exit_x) / v_out[0]
        specs.append((sign, label, s_ray, v_in, accel, tau, r_exit, v_out,
                      t_exit, t_screen))
        t_exit_latest = max(t_exit_latest, t_screen)

    t_final = t_exit_latest * 1.05 + 1e-12

    for sign, label, s_ray, v_in, accel, tau, r_exit, v_out, t_exit, t_screen in specs:
        def before(t, r0=r0, v0=v0):
            return r0 + v0 * t

        def inside(t, r_e=r_entry, v=v_in, a=accel, te=t_entry):
            dt = t - te
            return r_e + v * dt + 0.5 * a * dt * dt

        def after(t, r_x=r_exit, v=v_out, tx=t_exit):
            return r_x + v * (t - tx)

        r_screen = r_exit + v_out * (t_screen - t_exit)
        straight_u = float((r0 + v0 * t_screen) @ u_hat)
        events = [
            Event(time=t_entry,
                  point=ConfigurationPoint(r_entry.copy()),
                  data={"kind": "align", "branch": label,
                        "spin": s_ray}),
            Event(time=t_screen,
                  point=ConfigurationPoint(r_screen),
                  data={"kind": "screen", "branch": label,
                        "deflection": float(r_screen @ u_hat) - straight_u}),
        ]
        traj = PiecewiseTrajectory(
            [Segment(0.0, t_entry, before),
             Segment(t_entry, t_exit, inside),
             Segment(t_exit, t_final, after)],
            branch_id=label, events_list=events)
        traj.native_step = min(tau, t_entry) / 64.0
        traj.spin = s_ray
        traj.transit_time = tau
        traj.screen_time = t_screen
        branches.append(traj)

    return branches[0], branches[1]


# ---------------------------------------------------------------------------
# pair statistics on the 16-cell measure
# ---------------------------------------------------------------------------

def planar_setting(angle_deg: float) -> np.ndarray:
    """Unit vector in the z-x plane at the given angle from the z axis."""
    a = math.radians(angle_deg)
    return np.array([math.sin(a), 0.0, math.cos(a)])


def chsh_optimal_angles() -> tuple[float, float, float, float]:
    """Angles (a, a', b, b') in degrees maximising the four-correlator sum."""
    return 0.0, 90.0, 225.0, 135.0


def singlet_measure(a, b) -> np.ndarray:
    """(2, 2) outcome weights at fixed settings, index 0 -> +1, 1 -> -1.

    p(r_a, r_b) = (1 - r_a r_b a.b) / 4. Marginals over either outcome are
    exactly one half for any settings: the weights (1-x)/4 and (1+x)/4 sum
    to exactly 1/2 in floating point for every |x| <= 1, so neither wing
    can see the other's setting choice in its own outcome rates.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for name, v in (("a", a), ("b", b)):
        if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
            raise ValueError(f"setting {name} must be a unit vector")
    x = float(a @ b)
    anti = 0.25 * (1.0 - x)
    corr = 0.25 * (1.0 + x)
    return np.array([[anti, corr], [corr, anti]])


def global_epr_measure(a, a_prime, b, b_prime,
                       setting_priors=None) -> np.ndarray:
    """(2, 2, 2, 2) weights over (setting A, result A, setting B, result B)."""
    if setting_priors is None:
        setting_priors = np.full((2, 2), 0.25)
    priors = np.asarray(setting_priors, dtype=float)
    if priors.shape != (2, 2) or np.any(priors < 0):
        raise ValueError("setting priors must be a nonnegative (2, 2) array")
    out = np.zeros((2, 2, 2, 2))
    for i, av in enumerate((a, a_prime)):
        for j, bv in enumerate((b, b_prime)):
            out[i, :, j, :] = priors[i, j] * singlet_measure(av, bv)
    return out


def epr_conditional_probabilities(measure_weights: np.ndarray,
                                  query: tuple[int, int]) -> np.ndarray:
    """Outcome probabilities given a setting pair, as ratios of cell masses."""
    w = np.asarray(measure_weights, dtype=float)
    if w.shape != (2, 2, 2, 2):
        raise ValueError("measure must have shape (2, 2, 2, 2) over "
                         "(setting A, result A, setting B, result B)")
    if np.any(w < 0):
        raise ValueError("measure weights must be nonnegative")
    i, j = query
    block = w[i, :, j, :]
    total = float(block.sum())
    if total <= 0:
        raise UnconditionedSettingError(
            f"setting pair ({i}, {j}) has zero mass; conditioning on it is "
            f"undefined")
    return block / total


def correlator(conditional: np.ndarray) -> float:
    """E = sum over outcomes of r_a r_b p(r_a, r_b | settings)."""
    p = np.asarray(conditional, dtype=float)
    signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return float((signs * p).sum())


def chsh_value(measure_builder: Callable[[np.ndarray, np.ndarray], np.ndarray],
               a, a_prime, b, b_prime) -> float:
    """S = E(a,b) + E(a,b') + E(a',b) - E(a',b').

    ``measure_builder(a_vec, b_vec)`` returns the (2, 2) outcome weights at
    one setting pair; each is normalised before the correlator is taken.
    """
    def corr(av, bv):
        w = np.asarray(measure_builder(av, bv), dtype=float)
        total = float(w.sum())
        if total <= 0:
            raise UnconditionedSettingError("setting pair carries zero mass")
        return correlator(w / total)

    return (corr(a, b) + corr(a, b_prime)
            + corr(a_prime, b) - corr(a_prime, b_prime))


def cells_from_outcomes(setting_a, result_a, setting_b, result_b) -> np.ndarray:
    """Count branch outcomes into the 16-cell layout.

    Settings are 0/1 indices; results are +1/-1 (or the branch ids "+"/"-").
    This is the bridge from sampled per-pair device outcomes to the measure
    representation the conditionals consume.
    """
    def as_result_index(r):
        arr = np.asarray(r)
        if arr.dtype.kind in "USO":
            return np.where(arr == "+", 0, 1).astype(np.intp)
        return np.where(np.asarray(arr, dtype=float) > 0, 0, 1).astype(np.intp)

    ia = np.asarray(setting_a, dtype=np.intp)
    ib = np.asarray(setting_b, dtype=np.intp)
    ra = as_result_index(result_a)
    rb = as_result_index(result_b)
    if not (ia.shape == ib.shape == ra.shape == rb.shape):
        raise ValueError("outcome arrays must share one shape")
    flat = ((ia * 2 + ra) * 2 + ib) * 2 + rb
    counts = np.bincount(flat, minlength=16).astype(float)
    return counts.reshape(2, 2, 2, 2)


def sample_epr_counts(a, a_prime, b, b_prime, n_pairs: int,
                      seed: int = 0) -> np.ndarray:
    """Sample pairs (uniform settings, singlet outcomes) into cell counts."""
    from .rng import stream

    rng = stream(seed, "epr-pairs")
    n_settings = rng.multinomial(n_pairs, [0.25] * 4)
    counts = np.zeros((2, 2, 2, 2))
    vecs = ((a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime))
    idx = ((0, 0), (0, 1), (1, 0), (1, 1))
    for n_ij, (av, bv), (i, j) in zip(n_settings, vecs, idx):
        if n_ij == 0:
            continue
        cells = rng.multinomial(int(n_ij), singlet_measure(av, bv).ravel())
        counts[i, :, j, :] = cells.reshape(2, 2)
    return counts


def chsh_estimate(counts: np.ndarray) -> tuple[float, float]:
    """(S estimate, standard error) from sampled cell counts."""
    c = np.asarray(counts, dtype=float)
    if c.shape != (2, 2, 2, 2):
        raise ValueError("counts must have shape (2, 2, 2, 2)")
    total = 0.0
    var = 0.0
    terms = {}
    for i in (0, 1):
        for j in (0, 1):
            block = c[i, :, j, :]
            n = float(block.sum())
            if n <= 0:
                raise UnconditionedSettingError(
                    f"no sampled pairs for setting pair ({i}, {j})")
            e = correlator(block / n)
            terms[(i, j)] = e
            var += (1.0 - e * e) / n
    total = terms[(0, 0)] + terms[(0, 1)] + terms[(1, 0)] - terms[(1, 1)]
    return total, math.sqrt(var)


def deterministic_strategies():
    """All 16 ways to fix both wings' outcomes per setting in advance."""
    for ra0 in (1, -1):
        for ra1 in (1, -1):
            for rb0 in (1, -1):
                for rb1 in (1, -1):
                    yield ((ra0, ra1), (rb0, rb1))


def chsh_of_strategy(strategy) -> float:
    """S for outcomes fixed per setting: E(i, j) = A_i B_j."""
    (ra0, ra1), (rb0, rb1) = strategy
    e = lambda i, j: (ra0, ra1)[i] * (rb0, rb1)[j]
    return float(e(0, 0) + e(0, 1) + e(1, 0) - e(1, 1))
