"""Fixed-step simulation of the tracking loop and constraint monitoring.

The integrator is classic fourth-order Runge-Kutta.  Because the closed
loop is linear time-invariant, one step collapses to
``x+ = PHI x + D1 r(t) + D2 r(t+h/2) + D3 r(t+h)`` with constant matrices;
this is algebraically identical to the textbook four-stage scheme and costs
a single matrix-vector product per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidModel, NonFiniteState
from .model import ClosedLoop, ControllerGains, InputConstraint, PlantModel, StateConstraint
from .polyhedra import Polyhedron


@dataclass(frozen=True)
class Ramp:
    """r(t) = slope * t + intercept."""

    slope: float
    intercept: float = 0.0

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        return self.slope * t + self.intercept


@dataclass(frozen=True)
class Sinusoid:
    """r(t) = amplitude * sin(omega * t)."""

    amplitude: float
    omega: float

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.sin(self.omega * t)


class PiecewiseRamp:
    """Continuous piecewise-affine reference.

    ``segments`` is a list of (t_start, slope, intercept); segment k applies
    on [t_start_k, t_start_{k+1}) and the last one extends to infinity.
    Adjacent segments must agree at the breakpoints within ``cont_tol``.
    """

    def __init__(self, segments, cont_tol: float = 1e-9):
        segs = [(float(a), float(b), float(c)) for a, b, c in segments]
        if not segs:
            raise InvalidModel("piecewise reference needs at least one segment")
        starts = [s[0] for s in segs]
        if starts[0] != 0.0:
            raise InvalidModel("first segment must start at t = 0")
        if any(t2 <= t1 for t1, t2 in zip(starts, starts[1:])):
            raise InvalidModel("segment start times must be strictly increasing")
        for (t1, s1, c1), (t2, s2, c2) in zip(segs, segs[1:]):
            left = s1 * t2 + c1
            right = s2 * t2 + c2
            if abs(left - right) > cont_tol:
                raise InvalidModel(
                    f"discontinuity {left - right:.3e} at breakpoint t = {t2:g}"
                )
        self.segments = segs
        self._starts = np.array(starts)
        self._slopes = np.array([s[1] for s in segs])
        self._icepts = np.array([s[2] for s in segs])

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self._starts, t, side="right") - 1, 0, len(self.segments) - 1)
        return self._slopes[idx] * t + self._icepts[idx]


ReferenceSignal = Ramp | PiecewiseRamp | Sinusoid


def eval_reference(sig: ReferenceSignal, t):
    """Value of the reference signal at time(s) t >= 0."""
    return sig.eval(t)


def rk4_step_matrices(a: np.ndarray, b: np.ndarray, dt: float):
    """Exact RK4 transition matrices (PHI, D1, D2, D3) for x' = a x + b r."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    b = np.asarray(b, dtype=float).reshape(n, -1)
    ha = a * dt
    ha2 = ha @ ha
    phi = np.eye(n) + ha + ha2 / 2.0 + ha2 @ ha / 6.0 + ha2 @ ha2 / 24.0
    ab = ha @ b
    a2b = ha @ ab
    a3b = ha @ a2b
    d1 = (dt / 6.0) * (b + ab + a2b / 2.0 + a3b / 4.0)
    d2 = (dt / 6.0) * (4.0 * b + 2.0 * ab + a2b / 2.0)
    d3 = (dt / 6.0) * b
    return phi, d1, d2, d3


def rk4_lti(a, b, ref_sig: ReferenceSignal, x0, horizon: float, dt: float):
    """Integrate x' = a x + b r(t) with fixed-step RK4.

    Returns (times, states) with ``states[k] = x(times[k])`` on the uniform
    grid 0, dt, ..., horizon.  Raises :class:`NonFiniteState` if the
    trajectory overflows.
    """
    if dt <= 0.0 or horizon < dt:
        raise DimensionMismatch("need dt > 0 and horizon >= dt")
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (n,):
        raise DimensionMismatch(f"x0 must have dimension {n}")
    steps = int(round(horizon / dt))
    times = np.arange(steps + 1) * dt
    r_grid = np.asarray(eval_reference(ref_sig, times), dtype=float)
    r_half = np.asarray(eval_reference(ref_sig, times[:-1] + dt / 2.0), dtype=float)

    phi, d1, d2, d3 = rk4_step_matrices(a, b, dt)
    d1, d2, d3 = d1.ravel(), d2.ravel(), d3.ravel()
    states = np.empty((steps + 1, n))
    states[0] = x0
    x = x0.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            x = phi @ x + d1 * r_grid[k] + d2 * r_half[k] + d3 * r_grid[k + 1]
            states[k + 1] = x
    if not np.all(np.isfinite(states)):
        bad = int(np.flatnonzero(~np.isfinite(states).all(axis=1))[0])
        raise NonFiniteState(f"state left finite range at t = {times[bad]:g}")
    return times, states


@dataclass(frozen=True)
class Trajectory:
    """Sampled closed-loop run on a uniform time grid."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    references: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        counts = {
            len(self.times),
            len(self.states),
            len(self.inputs),
            len(self.outputs),
            len(self.references),
            len(self.errors),
        }
        if len(counts) != 1:
            raise DimensionMismatch("trajectory arrays must share their length")
        if len(self.times) >= 2:
            steps = np.diff(self.times)
            if np.any(steps <= 0) or np.abs(steps - steps[0]).max() > 1e-9 * (1 + steps[0]):
                raise DimensionMismatch("times must increase with a constant step")


def simulate(
    cl: ClosedLoop,
    gains: ControllerGains,
    plant: PlantModel,
    ref_sig: ReferenceSignal,
    x0,
    horizon: float,
    dt: float,
    store_every: int = 1,
) -> Trajectory:
    """Roll out the closed loop under a reference signal.

    The control input is reconstructed pointwise from the gains; no
    saturation is applied (certified designs keep constraints inactive).
    ``store_every`` decimates the returned arrays; the run itself always
    uses the full grid.
    """
    if store_every < 1:
        raise DimensionMismatch("store_every must be >= 1")
    times, states = rk4_lti(cl.a_cl, cl.b_cl, ref_sig, x0, horizon, dt)
    sel = np.arange(0, len(times), store_every)
    times = times[sel]
    states = states[sel]
    n = plant.n
    refs = np.asarray(eval_reference(ref_sig, times), dtype=float)
    outputs = states[:, :n] @ plant.c.ravel()
    inputs = (
        np.outer(outputs, gains.k)
        + np.outer(states[:, n], gains.k_i1)
        + np.outer(states[:, n + 1], gains.k_i2)
        + np.outer(refs, gains.k_r)
    )
    errors = refs - outputs
    return Trajectory(
        times=times,
        states=states,
        inputs=inputs,
        outputs=outputs,
        references=refs,
        errors=errors,
    )


@dataclass(frozen=True)
class Violation:
    time: float
    kind: str  # "state" | "input" | "invariant"
    row: int
    margin: float


def monitor(
    traj: Trajectory,
    xc: StateConstraint | None,
    uc: InputConstraint | None,
    inv: Polyhedron | None,
    tol: float = 1e-6,
) -> list[Violation]:
    """Samples violating X x <= 1, U u <= 1 or the invariant set rows.

    ``inv`` is the invariant polyhedron in the closed-loop coordinates
    (offsets all one); pass None to skip that check.
    """
    out: list[Violation] = []
    n_states = traj.states.shape[1]

    def scan(values, kind):
        # values: samples x rows of constraint levels, must stay <= 1
        bad = values > 1.0 + tol
        for t_idx, row in zip(*np.nonzero(bad)):
            out.append(
                Violation(
                    time=float(traj.times[t_idx]),
                    kind=kind,
                    row=int(row),
                    margin=float(values[t_idx, row] - 1.0),
                )
            )

    if xc is not None:
        n = xc.x_mat.shape[1]
        if n > n_states:
            raise DimensionMismatch("state constraint wider than the stored states")
        scan(traj.states[:, :n] @ xc.x_mat.T, "state")
    if uc is not None:
        scan(traj.inputs @ uc.u_mat.T, "input")
    if inv is not None:
        if inv.dim != n_states:
            raise DimensionMismatch("invariant set dimension differs from the states")
        scaled = traj.states @ inv.shape_mat.T / inv.offset
        scan(scaled, "invariant")
    out.sort(key=lambda v: (v.time, v.kind, v.row))
    return out


def write_trajectory_csv(traj: Trajectory, path, every: int = 10) -> int:
    """CSV export with columns t, x1..xn, x_I1, x_I2, u, y, r, e.

    ``every`` decimates rows to bound the file size.  Returns the number of
    data rows written.
    """
    if every < 1:
        raise DimensionMismatch("every must be >= 1")
    n_cl = traj.states.shape[1]
    n = n_cl - 2
    m = traj.inputs.shape[1]
    cols = (
        ["t"]
        + [f"x{i + 1}" for i in range(n)]
        + ["x_I1", "x_I2"]
        + (["u"] if m == 1 else [f"u{i + 1}" for i in range(m)])
        + ["y", "r", "e"]
    )
    sel = range(0, len(traj.times), every)
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        count = 0
        for k in sel:
            vals = (
                [traj.times[k]]
                + list(traj.states[k])
                + list(traj.inputs[k])
                + [traj.outputs[k], traj.references[k], traj.errors[k]]
            )
            fh.write(",".join(f"{v:.11e}" for v in vals) + "\n")
            count += 1
    return count
