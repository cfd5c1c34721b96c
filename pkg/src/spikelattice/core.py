"""Shared model parameters, lattice windows, and boundary policies.

The simulated system lives on the integer lattice. Every active site fires
at rate 1 and is wiped at leak rate ``gamma``; all simulators in this
package share these two rates through :class:`ModelParams`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class SimulationError(ValueError):
    """Invalid input to a simulator or estimator."""


class NoActiveClocksError(SimulationError):
    """Raised when a race is requested over an empty or all-zero rate set."""


@dataclass(frozen=True)
class ModelParams:
    """Rates of the jump dynamics.

    gamma: leak rate, events per unit time, >= 0.
    spike_rate: firing rate of an active site; the model fixes this to 1.
    """

    gamma: float
    spike_rate: float = 1.0

    def __post_init__(self) -> None:
        if not (self.gamma >= 0.0):
            raise SimulationError(f"gamma must be >= 0, got {self.gamma}")
        if self.spike_rate != 1.0:
            raise SimulationError("spike_rate is fixed to 1 in this model")


@dataclass(frozen=True)
class SiteInterval:
    """Closed interval [lo, hi] of lattice coordinates."""

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise SimulationError(f"empty interval [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, site: int) -> bool:
        return self.lo <= site <= self.hi

    def sites(self) -> range:
        return range(self.lo, self.hi + 1)


class Boundary(Enum):
    """Policy for the two neighbors just outside a finite window.

    ACTIVE_GHOSTS: the ghost neighbors fire at rate 1 forever, each firing
        turning the adjacent edge site on. Companion to the all-ones initial
        condition.
    SILENT_GHOSTS: no input from outside the window.
    PERIODIC: the window wraps around.
    """

    ACTIVE_GHOSTS = "active"
    SILENT_GHOSTS = "silent"
    PERIODIC = "periodic"


def default_window_radius(horizon: float) -> int:
    """Window radius for estimates about a site at a given horizon.

    Information spreads at finite speed (every site fires at rate <= 1), so
    ceil(5*t) + 5 leaves the estimate insensitive to the boundary policy;
    callers can confirm with a doubling check.
    """
    if horizon < 0:
        raise SimulationError("horizon must be >= 0")
    return math.ceil(5.0 * horizon) + 5
