"""Trajectory sets, rate statistics, and measure transfer.

A dynamical system is represented extensionally as a set of trajectories
through a configuration space; statistics enter only as a measure over the
set. Outcome probabilities are relative rates along single trajectories,
aggregated over an ensemble drawn from the measure. The measure can be
carried from one boundary description to another by pushing samples through
a boundary map.

Conventions used throughout:

* rates are vectors of length ``n_outcomes`` summing to 1 over the trials
  that actually triggered;
* the ensemble mean and variance are the plain first and second moments of
  the per-trajectory rate vectors (variance computed two-pass for
  stability);
* trajectories with fewer than ``n_min_trials`` trials are excluded from
  ensemble statistics rather than padded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateMeasureError,
    EmptyEnsembleError,
    NoTrialsError,
    PushforwardError,
)
from .rng import stream, trajectory_stream

__all__ = [
    "ConfigurationPoint",
    "Event",
    "Trajectory",
    "SampledTrajectory",
    "PiecewiseTrajectory",
    "Experiment",
    "RateResult",
    "RateStatistics",
    "MeasureSpec",
    "HistogramMeasure",
    "BoundaryMap",
    "point_mass",
    "evaluate_rates",
    "ensemble_statistics",
    "is_well_defined",
    "pushforward",
    "validate_jacobian",
    "check_determinism",
]


# ---------------------------------------------------------------------------
# configuration points and trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfigurationPoint:
    """A point of configuration space.

    ``sector`` labels the component of a piecewise configuration space
    (e.g. before/after a decay, where the dimension changes). Points in
    different sectors are never considered close.
    """

    coords: np.ndarray
    sector: str | None = None

    def distance(self, other: "ConfigurationPoint") -> float:
        if self.sector != other.sector:
            return np.inf
        a = np.atleast_1d(np.asarray(self.coords, dtype=float))
        b = np.atleast_1d(np.asarray(other.coords, dtype=float))
        if a.shape != b.shape:
            return np.inf
        return float(np.max(np.abs(a - b))) if a.size else 0.0


@dataclass(frozen=True)
class Event:
    """One trial candidate along a trajectory.

    ``data`` carries the system-specific payload an experiment classifies
    (a map iterate, an encounter record, a detector crossing, ...).
    """

    time: float
    point: ConfigurationPoint | None
    data: Any = None


class Trajectory:
    """Base class: a path ``t -> ConfigurationPoint`` plus its event stream.

    ``branch_id`` distinguishes co-existing continuations that share a past
    (an indeterministic split); ``None`` for unbranched paths.
    """

    branch_id: str | None = None
    #: natural sampling step for comparison grids; None means "pick from span"
    native_step: float | None = None

    @property
    def domain(self) -> tuple[float, float]:
        raise NotImplementedError

    def evaluate(self, t: float) -> ConfigurationPoint:
        raise NotImplementedError

    def events(self, horizon: int | None = None) -> Iterable[Event]:
        """Trial candidates in time order; empty for event-free paths."""
        return ()


class SampledTrajectory(Trajectory):
    """Piecewise-linear interpolant of sampled positions."""

    def __init__(self, times, points, sector=None, branch_id=None):
        self.times = np.asarray(times, dtype=float)
        self.points = np.asarray(points, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if self.times.ndim != 1 or len(self.times) != len(self.points):
            raise ValueError("times and points must have matching leading length")
        if len(self.times) < 2 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing, length >= 2")
        self.sector = sector
        self.branch_id = branch_id

    @property
    def domain(self):
        return float(self.times[0]), float(self.times[-1])

    def evaluate(self, t):
        t = float(t)
        t0, t1 = self.domain
        if t < t0 or t > t1:
            raise ValueError(f"time {t} outside domain [{t0}, {t1}]")
        i = int(np.searchsorted(self.times, t, side="right") - 1)
        i = min(max(i, 0), len(self.times) - 2)
        h = self.times[i + 1] - self.times[i]
        w = (t - self.times[i]) / h
        coords = (1.0 - w) * self.points[i] + w * self.points[i + 1]
        return ConfigurationPoint(coords, self.sector)


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    path: Callable[[float], np.ndarray]
    sector: str | None = None


class PiecewiseTrajectory(Trajectory):
    """Closed-form path pieces glued in time order.

    Segment ``i`` owns ``[t0_i, t0_{i+1})``; the last owns its right
    endpoint too. Sectors may differ between pieces (piecewise
    configuration spaces).
    """

    def __init__(self, segments: Sequence[Segment], branch_id=None,
                 events_list: Sequence[Event] | None = None):
        if not segments:
            raise ValueError("at least one segment required")
        for a, b in zip(segments, segments[1:]):
            if not np.isclose(a.t1, b.t0):
                raise ValueError("segments must be contiguous in time")
        self.segments = list(segments)
        self.branch_id = branch_id
        self._events = list(events_list) if events_list else []

    @property
    def domain(self):
        return float(self.segments[0].t0), float(self.segments[-1].t1)

    def evaluate(self, t):
        t = float(t)
        t0, t1 = self.domain
        if t < t0 - 1e-12 or t > t1 + 1e-12:
            raise ValueError(f"time {t} outside domain [{t0}, {t1}]")
        for seg in self.segments:
            if t < seg.t1 or seg is self.segments[-1]:
                return ConfigurationPoint(np.asarray(seg.path(t), dtype=float),
                                          seg.sector)
        raise AssertionError("unreachable")

    def events(self, horizon=None):
        evs = self._events if horizon is None else self._events[:horizon]
        return list(evs)


# ---------------------------------------------------------------------------
# experiments and rates
# ---------------------------------------------------------------------------


class Experiment:
    """Repeatable yes/no-or-more experiment along a trajectory.

    ``trigger`` decides whether a trial happens at an event (None means every
    event is a trial); ``classify`` maps a triggered event to an outcome
    index in ``range(n_outcomes)``.
    """

    def __init__(self, n_outcomes: int,
                 classify: Callable[[Event], int],
                 trigger: Callable[[Event], bool] | None = None,
                 name: str = ""):
        if n_outcomes < 1:
            raise ValueError("n_outcomes must be >= 1")
        self.n_outcomes = int(n_outcomes)
        self.classify = classify
        self.trigger = trigger
        self.name = name

    def outcome_sequence(self, trajectory: Trajectory,
                         horizon: int | None = None) -> np.ndarray:
        """Outcome index per triggered trial, in time order.

        Subclasses may override with a vectorized implementation; the
        contract is identical.
        """
        out = []
        for ev in trajectory.events(horizon):
            if self.trigger is None or self.trigger(ev):
                out.append(self.classify(ev))
        return np.asarray(out, dtype=np.intp)


@dataclass(frozen=True)
class RateResult:
    """Relative outcome rates along one trajectory.

    ``flagged`` mirrors the convention that a rate whose defining limit has
    not stabilized (too few trials) is reported but not trusted.
    """

    rates: np.ndarray
    n_trials: int
    flagged: bool


@dataclass(frozen=True)
class RateStatistics:
    """First two moments of per-trajectory rates over an ensemble."""

    mean: np.ndarray
    variance: np.ndarray
    n_trajectories: int
    n_excluded: int
    n_min_trials: int


def evaluate_rates(trajectory: Trajectory, experiment: Experiment,
                   horizon: int | None = None,
                   n_min_trials: int = 1) -> RateResult:
    """Relative rate of each outcome along ``trajectory``.

    ``horizon`` caps the number of events considered. Raises
    :class:`NoTrialsError` if no event triggers at all; flags the result when
    fewer than ``n_min_trials`` trials occurred.
    """
    outcomes = experiment.outcome_sequence(trajectory, horizon)
    n = int(outcomes.size)
    if n == 0:
        raise NoTrialsError(
            f"experiment {experiment.name or type(experiment).__name__!r} "
            "never triggered")
    if outcomes.min() < 0 or outcomes.max() >= experiment.n_outcomes:
        raise ValueError("classify returned an outcome index out of range")
    counts = np.bincount(outcomes, minlength=experiment.n_outcomes)
    rates = counts / float(n)
    return RateResult(rates=rates, n_trials=n, flagged=n < int(n_min_trials))


def ensemble_statistics(measure: "MeasureSpec",
                        trajectory_builder: Callable[[np.ndarray], Trajectory],
                        experiment: Experiment,
                        n_trajectories: int,
                        n_min_trials: int = 1,
                        seed: int = 0,
                        horizon: int | None = None) -> RateStatistics:
    """Mean and variance of outcome rates over a sampled trajectory ensemble.

    Boundary points are drawn one per trajectory from ``measure`` using the
    stream derived from ``(seed, index)``, so the result is reproducible bit
    for bit for a given ``(seed, n_trajectories)`` independent of evaluation
    order. Trajectories with fewer than ``n_min_trials`` trials are excluded;
    if all are excluded an :class:`EmptyEnsembleError` is raised.
    """
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    rows = []
    excluded = 0
    for i in range(int(n_trajectories)):
        rng = trajectory_stream(seed, i)
        point = measure.sampler(rng, 1)[0]
        traj = trajectory_builder(point)
        try:
            rr = evaluate_rates(traj, experiment, horizon=horizon,
                                n_min_trials=n_min_trials)
        except NoTrialsError:
            excluded += 1
            continue
        if rr.flagged:
            excluded += 1
            continue
        rows.append(rr.rates)
    if not rows:
        raise EmptyEnsembleError(
            f"all {n_trajectories} trajectories had fewer than "
            f"{n_min_trials} trials")
    R = np.asarray(rows)
    mean = R.mean(axis=0)
    # two-pass form of <f^2> - <f>^2; nonnegative by construction
    variance = np.mean((R - mean) ** 2, axis=0)
    # snap pure roundoff to zero; genuine rate variances are quantized far above this
    variance[variance < 1e-30] = 0.0
    return RateStatistics(mean=mean, variance=variance,
                          n_trajectories=len(rows), n_excluded=excluded,
                          n_min_trials=int(n_min_trials))


def is_well_defined(stats: RateStatistics, tolerance: float = 0.01) -> bool:
    """True iff every outcome's rate variance is below ``tolerance``.

    Probabilities only deserve the name when the per-trajectory rates
    cluster tightly around the ensemble mean.
    """
    return bool(np.all(stats.variance < tolerance))


# ---------------------------------------------------------------------------
# measures and maps
# ---------------------------------------------------------------------------


class MeasureSpec:
    """A measure given operationally: sampler, optional density, total mass.

    ``sampler(rng, n)`` returns an ``(n, dimension)`` array. ``density`` is
    the density with respect to the natural reference measure of the space
    (Lebesgue for continuous spaces, counting for sequence spaces) and may be
    None when only sampling is needed. Zero or non-finite total mass is
    rejected: everything downstream divides by it.
    """

    def __init__(self, dimension: int,
                 sampler: Callable[[np.random.Generator, int], np.ndarray],
                 density: Callable[[np.ndarray], np.ndarray] | None = None,
                 total_mass: float = 1.0,
                 name: str = ""):
        if not np.isfinite(total_mass) or total_mass <= 0.0:
            raise DegenerateMeasureError(
                f"total mass must be finite and positive, got {total_mass}")
        self.dimension = int(dimension)
        self.sampler = sampler
        self.density = density
        self.total_mass = float(total_mass)
        self.name = name


def point_mass(point, name: str = "point-mass") -> MeasureSpec:
    """Measure concentrated on a single boundary point."""
    p = np.atleast_1d(np.asarray(point, dtype=float))

    def sampler(rng, n):
        return np.tile(p, (n, 1))

    return MeasureSpec(dimension=p.size, sampler=sampler, density=None,
                       total_mass=1.0, name=name)


class HistogramMeasure(MeasureSpec):
    """Measure represented by bin masses on a rectangular grid."""

    def __init__(self, edges: Sequence[np.ndarray], masses: np.ndarray,
                 total_mass: float = 1.0, name: str = ""):
        self.edges = [np.asarray(e, dtype=float) for e in edges]
        masses = np.asarray(masses, dtype=float)
        if masses.shape != tuple(len(e) - 1 for e in self.edges):
            raise ValueError("masses shape does not match bin edges")
        if np.any(masses < 0):
            raise ValueError("negative bin mass")
        s = masses.sum()
        if not np.isfinite(s) or s <= 0:
            raise DegenerateMeasureError("histogram has zero total mass")
        self.masses = masses * (total_mass / s)
        dim = len(self.edges)
        self._flat = self.masses.ravel()
        self._probs = self._flat / self._flat.sum()
        widths = [np.diff(e) for e in self.edges]
        vol = widths[0]
        for w in widths[1:]:
            vol = np.multiply.outer(vol, w)
        self._volumes = vol

        super().__init__(dimension=dim, sampler=self._sample,
                         density=self._density, total_mass=total_mass,
                         name=name)

    def _sample(self, rng, n):
        idx = rng.choice(self._flat.size, size=n, p=self._probs)
        unraveled = np.unravel_index(idx, self.masses.shape)
        out = np.empty((n, len(self.edges)))
        for d, e in enumerate(self.edges):
            lo = e[unraveled[d]]
            hi = e[unraveled[d] + 1]
            out[:, d] = lo + (hi - lo) * rng.random(n)
        return out

    def _density(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        idx = []
        inside = np.ones(len(points), dtype=bool)
        for d, e in enumerate(self.edges):
            i = np.searchsorted(e, points[:, d], side="right") - 1
            inside &= (i >= 0) & (i < len(e) - 1)
            idx.append(np.clip(i, 0, len(e) - 2))
        dens = self.masses[tuple(idx)] / self._volumes[tuple(idx)]
        dens[~inside] = 0.0
        return dens


@dataclass(frozen=True)
class BoundaryMap:
    """Vectorized map between boundary-condition descriptions.

    ``forward`` maps an ``(n, source_dimension)`` array to
    ``(n, target_dimension)``; rows where the map is undefined must come back
    as NaN. ``jacobian``, when given, returns per-point Jacobian matrices and
    can be validated against finite differences with
    :func:`validate_jacobian`.
    """

    source_dimension: int
    target_dimension: int
    forward: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""


def validate_jacobian(bmap: BoundaryMap, points: np.ndarray,
                      rel_tol: float = 1e-5, step: float = 1e-6) -> float:
    """Max relative disagreement between ``bmap.jacobian`` and central FD.

    Raises ValueError if the map has no jacobian, or if the disagreement
    exceeds ``rel_tol``.
    """
    if bmap.jacobian is None:
        raise ValueError("boundary map declares no jacobian")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    J = np.asarray(bmap.jacobian(points))
    worst = 0.0
    for k, p in enumerate(points):
        fd = np.empty((bmap.target_dimension, bmap.source_dimension))
        for d in range(bmap.source_dimension):
            h = step * max(1.0, abs(p[d]))
            pp, pm = p.copy(), p.copy()
            pp[d] += h
            pm[d] -= h
            fp = bmap.forward(pp[None, :])[0]
            fm = bmap.forward(pm[None, :])[0]
            fd[:, d] = (fp - fm) / (2.0 * h)
        scale = max(1.0, float(np.max(np.abs(fd))))
        worst = max(worst, float(np.max(np.abs(J[k] - fd))) / scale)
    if worst > rel_tol:
        raise ValueError(f"jacobian disagrees with finite differences: "
                         f"{worst:.3e} > {rel_tol:.3e}")
    return worst


def pushforward(measure: MeasureSpec, bmap: BoundaryMap,
                n_samples: int = 100_000, seed: int = 0,
                bins: int | Sequence[int] = 64,
                value_range: Sequence[tuple[float, float]] | None = None,
                max_undefined_fraction: float = 1e-3) -> HistogramMeasure:
    """Carry ``measure`` through ``bmap`` by sampling, as a binned measure.

    The returned histogram measure has the same total mass. Sampled points
    with no image (NaN rows) are dropped; if their fraction exceeds
    ``max_undefined_fraction`` the transfer aborts, since the image measure
    would silently lose mass.
    """
    if measure.dimension != bmap.source_dimension:
        raise ValueError("measure dimension does not match map source")
    rng = stream(seed)
    pts = measure.sampler(rng, int(n_samples))
    img = np.asarray(bmap.forward(pts), dtype=float)
    if img.ndim == 1:
        img = img[:, None]
    ok = np.all(np.isfinite(img), axis=1)
    bad = int((~ok).sum())
    if bad > max_undefined_fraction * n_samples:
        raise PushforwardError(
            f"{bad} of {n_samples} samples had no image "
            f"(> {max_undefined_fraction:.1%} allowed)")
    img = img[ok]
    hist, edges = np.histogramdd(img, bins=bins, range=value_range)
    return HistogramMeasure(edges, hist, total_mass=measure.total_mass,
                            name=f"pushforward({measure.name or 'measure'})")


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------


def check_determinism(trajectories: Sequence[Trajectory],
                      match_window: float,
                      tolerance: float,
                      time_step: float | None = None) -> bool:
    """Grid search for an indeterminism witness among ``trajectories``.

    A witness is a pair of (possibly time-shifted, possibly identical)
    trajectories that agree within ``tolerance`` at every sample of a window
    of length ``match_window`` but disagree at some later comparable time.
    Returns False iff a witness is found. Sampling is on a uniform grid
    (``time_step`` or each trajectory's native step or span/128), so this is
    a falsification search, not a proof of determinism.
    """
    if match_window <= 0:
        raise ValueError("match_window must be positive")

    sampled = []
    for tr in trajectories:
        t0, t1 = tr.domain
        if time_step is not None:
            h = float(time_step)
        elif tr.native_step is not None:
            h = float(tr.native_step)
        else:
            h = (t1 - t0) / 128.0
        if h <= 0:
            raise ValueError("nonpositive sampling step")
        times = np.arange(t0, t1 + h * 0.5, h)
        pts = [tr.evaluate(t) for t in times]
        sampled.append((h, pts))

    def window_len(h):
        return max(1, int(round(match_window / h))) + 1

    for i in range(len(sampled)):
        hi, pi = sampled[i]
        wi = window_len(hi)
        for j in range(i, len(sampled)):
            hj, pj = sampled[j]
            if not np.isclose(hi, hj):
                raise ValueError("trajectories must share a sampling step "
                                 "for comparison; pass time_step explicitly")
            w = wi
            for k1 in range(0, len(pi) - w + 1):
                k2_start = k1 + 1 if i == j else 0
                for k2 in range(k2_start, len(pj) - w + 1):
                    agree = all(pi[k1 + m].distance(pj[k2 + m]) <= tolerance
                                for m in range(w))
                    if not agree:
                        continue
                    # matched window: must now agree for as long as both run
                    m = w
                    while k1 + m < len(pi) and k2 + m < len(pj):
                        if pi[k1 + m].distance(pj[k2 + m]) > tolerance:
                            return False
                        m += 1
    return True
