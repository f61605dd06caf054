"""Two-tank benchmark data shared across the test suite."""

import numpy as np

from polytrack.model import (
    ControllerGains,
    InputConstraint,
    IntegralBounds,
    PlantModel,
    StateConstraint,
)

A = np.array([[-0.0304, 0.0187], [0.0, -0.0187]])
B = np.array([[6.6667], [10.0]])
C = np.array([[1.0, 0.0]])

# -0.38 <= x1 <= 0.68, -0.35 <= x2 <= 0.65 as X x <= 1
X_ROWS = np.array(
    [
        [1.0 / 0.68, 0.0],
        [-1.0 / 0.38, 0.0],
        [0.0, 1.0 / 0.65],
        [0.0, -1.0 / 0.35],
    ]
)
# |u| <= 2 as U u <= 1
U_ROWS = np.array([[0.5], [-0.5]])

GAINS_PHI1 = dict(k=-3.3170, k_i1=0.3141, k_i2=0.0071, k_r=2.8208)
GAINS_PHI2 = dict(k=-3.8881, k_i1=0.3733, k_i2=0.0085, k_r=3.3142)
GAINS_SINE = dict(k=-3.2391, k_i1=1.6503, k_i2=-3.1178, k_r=3.2106)

XI_PHI1 = (0.0617, 0.0693, 0.0300, 0.0456)
XI_PHI2 = (0.1000, 0.1000, 0.0487, 0.0739)
XI_SINE = (0.1000, 0.1000, 0.1000, 0.1000)

RHO_PHI1 = (0.4682, 0.1606)
RHO_PHI2 = (0.3000, 0.2000)
RHO_SINE = (0.13, 0.13)


def plant() -> PlantModel:
    return PlantModel(a=A, b=B, c=C)


def state_constraint() -> StateConstraint:
    return StateConstraint(x_mat=X_ROWS)


def input_constraint() -> InputConstraint:
    return InputConstraint(u_mat=U_ROWS)


def gains(which: str) -> ControllerGains:
    table = {"phi1": GAINS_PHI1, "phi2": GAINS_PHI2, "sine": GAINS_SINE}[which]
    return ControllerGains(**{k: [v] for k, v in table.items()})


def integral_bounds(which: str) -> IntegralBounds:
    table = {"phi1": XI_PHI1, "phi2": XI_PHI2, "sine": XI_SINE}[which]
    return IntegralBounds(*table)
