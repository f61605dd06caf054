import numpy as np
import pytest

from polytrack import DimensionMismatch, InvalidModel, NonFiniteState
from polytrack.model import ControllerGains, ReferenceClass, build_closed_loop
from polytrack.polyhedra import Polyhedron
from polytrack.sim import (
    PiecewiseRamp,
    Ramp,
    Sinusoid,
    eval_reference,
    monitor,
    rk4_lti,
    simulate,
    write_trajectory_csv,
)

import twotank

PIECEWISE = [(0.0, 0.01, 0.0), (30.0, -1.0 / 140.0, 36.0 / 70.0), (100.0, 0.0, -0.2)]


def two_tank_run(which="phi2", horizon=400.0, dt=1e-3, store_every=1):
    plant = twotank.plant()
    gains = twotank.gains(which)
    ref = ReferenceClass.ramp((0.3, 0.2))
    cl = build_closed_loop(plant, gains, ref)
    sig = PiecewiseRamp(PIECEWISE)
    return plant, gains, simulate(cl, gains, plant, sig, np.zeros(4), horizon, dt, store_every)


def test_zero_reference_equilibrium():
    plant = twotank.plant()
    gains = twotank.gains("phi2")
    cl = build_closed_loop(plant, gains, ReferenceClass.ramp((0.3, 0.2)))
    traj = simulate(cl, gains, plant, Ramp(0.0), np.zeros(4), 1.0, 1e-3)
    assert np.all(traj.states == 0.0)
    assert np.all(traj.inputs == 0.0)


def test_scalar_closed_form():
    # x' = -x + r with r = 1: x(t) = 1 - exp(-t)
    times, states = rk4_lti([[-1.0]], [[1.0]], Ramp(0.0, 1.0), [0.0], 2.0, 1e-3)
    exact = 1.0 - np.exp(-times[-1])
    assert abs(states[-1, 0] - exact) <= 1e-8


def test_order_of_accuracy_ratio():
    # measured at a step size where truncation dominates roundoff
    def endpoint_error(dt):
        times, states = rk4_lti([[-1.0]], [[1.0]], Ramp(0.0, 1.0), [0.0], 2.0, dt)
        return abs(states[-1, 0] - (1.0 - np.exp(-times[-1])))

    ratio = endpoint_error(0.05) / endpoint_error(0.025)
    assert 12.0 <= ratio <= 20.0


def test_rk4_matches_literal_stages():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 3)) - 1.5 * np.eye(3)
    b = rng.normal(size=(3, 1))
    x0 = rng.normal(size=3)
    sig = Sinusoid(0.7, 1.3)
    dt = 0.01
    times, states = rk4_lti(a, b, sig, x0, dt, dt)

    def f(t, x):
        return a @ x + b.ravel() * eval_reference(sig, t)

    k1 = f(0.0, x0)
    k2 = f(dt / 2, x0 + dt / 2 * k1)
    k3 = f(dt / 2, x0 + dt / 2 * k2)
    k4 = f(dt, x0 + dt * k3)
    ref = x0 + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert np.allclose(states[-1], ref, atol=1e-14)


def test_linearity_of_simulation():
    plant = twotank.plant()
    gains = twotank.gains("phi2")
    cl = build_closed_loop(plant, gains, ReferenceClass.ramp((0.3, 0.2)))
    rng = np.random.default_rng(5)
    x0a, x0b = rng.normal(size=4) * 0.01, rng.normal(size=4) * 0.01
    ra, rb = Ramp(0.001), Ramp(0.0, 0.05)

    t1 = simulate(cl, gains, plant, ra, x0a, 2.0, 1e-3)
    t2 = simulate(cl, gains, plant, rb, x0b, 2.0, 1e-3)

    class SumSig:
        def eval(self, t):
            return ra.eval(t) + rb.eval(t)

    t3 = simulate(cl, gains, plant, SumSig(), x0a + x0b, 2.0, 1e-3)
    assert np.allclose(t3.states, t1.states + t2.states, atol=1e-9)


def test_nonfinite_detection():
    # unstable scalar loop must be flagged, not silently returned
    with pytest.raises(NonFiniteState):
        rk4_lti([[500.0]], [[0.0]], Ramp(0.0, 0.0), [1.0], 5.0, 1e-2)


def test_piecewise_validation_and_eval():
    sig = PiecewiseRamp(PIECEWISE)
    assert eval_reference(sig, 30.0) == pytest.approx(0.3, abs=1e-9)
    assert eval_reference(sig, 200.0) == pytest.approx(-0.2, abs=1e-12)
    assert eval_reference(sig, 0.0) == 0.0
    vals = eval_reference(sig, np.array([10.0, 65.0, 150.0]))
    assert vals[0] == pytest.approx(0.1)
    assert vals[1] == pytest.approx(0.3 - (65.0 - 30.0) / 140.0)
    assert vals[2] == pytest.approx(-0.2)
    with pytest.raises(InvalidModel):
        PiecewiseRamp([(0.0, 0.01, 0.0), (30.0, 0.01, 1.0)])  # jump at t=30


def test_sinusoid_eval():
    sig = Sinusoid(0.13, 1.0)
    assert eval_reference(sig, np.pi / 2) == pytest.approx(0.13, abs=1e-12)


def test_sinusoid_exosystem_consistency():
    # second differences reproduce r'' = -omega^2 r
    omega, a, dt = 1.0, 0.13, 1e-3
    t = np.arange(0.0, 5.0, dt)
    r = eval_reference(Sinusoid(a, omega), t)
    rdd = (r[2:] - 2 * r[1:-1] + r[:-2]) / dt**2
    assert np.abs(rdd + omega**2 * r[1:-1]).max() <= 1e-6


def test_two_tank_piecewise_tracking():
    _, _, traj = two_tank_run("phi2")
    mask = traj.times >= 300.0
    assert np.abs(traj.errors[mask]).max() <= 1e-3


def test_monitor_on_certified_style_run():
    plant, gains, traj = two_tank_run("phi2", horizon=50.0)
    assert monitor(traj, twotank.state_constraint(), twotank.input_constraint(), None) == []


def test_monitor_flags_constructed_violations():
    plant = twotank.plant()
    # an inflated feedforward drives the states outside their box
    g = twotank.GAINS_PHI2.copy()
    g["k_r"] = g["k_r"] * 200.0
    hot = ControllerGains(**{k: [v] for k, v in g.items()})
    cl = build_closed_loop(plant, hot, ReferenceClass.ramp((0.3, 0.2)))
    traj = simulate(cl, hot, plant, PiecewiseRamp(PIECEWISE), np.zeros(4), 40.0, 1e-3)
    hits = monitor(traj, twotank.state_constraint(), twotank.input_constraint(), None)
    assert any(v.kind == "state" for v in hits)

    # a large integral state at t = 0 saturates the input channel directly
    gains = twotank.gains("phi2")
    cl = build_closed_loop(plant, gains, ReferenceClass.ramp((0.3, 0.2)))
    traj = simulate(cl, gains, plant, Ramp(0.0), [0.0, 0.0, 100.0, 0.0], 1.0, 1e-3)
    hits = monitor(traj, None, twotank.input_constraint(), None)
    assert hits and hits[0].kind == "input" and hits[0].time == 0.0


def test_monitor_zero_trajectory():
    plant = twotank.plant()
    gains = twotank.gains("phi2")
    cl = build_closed_loop(plant, gains, ReferenceClass.ramp((0.3, 0.2)))
    traj = simulate(cl, gains, plant, Ramp(0.0), np.zeros(4), 1.0, 1e-3)
    box = Polyhedron(np.vstack([np.eye(4), -np.eye(4)]), np.ones(8))
    assert monitor(traj, twotank.state_constraint(), twotank.input_constraint(), box) == []


def test_trajectory_csv(tmp_path):
    _, _, traj = two_tank_run("phi2", horizon=1.0)
    path = tmp_path / "run.csv"
    rows = write_trajectory_csv(traj, path, every=10)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x1,x2,x_I1,x_I2,u,y,r,e"
    assert rows == len(lines) - 1 == 101
    first = [float(v) for v in lines[1].split(",")]
    assert len(first) == 9


def test_decimated_row_count_formula():
    # 400 s at 1 ms stored every 10 steps: 40001 rows
    _, _, traj = two_tank_run("phi2", horizon=400.0, dt=1e-3, store_every=10)
    assert len(traj.times) == 40001


def test_store_every_validation():
    with pytest.raises(DimensionMismatch):
        two_tank_run("phi2", horizon=1.0, store_every=0)
