"""Exact event-driven simulation of the forward dynamics on a finite window.

Two views of the same jump process are provided. The binary process keeps
one bit per site: an active site (bit 1) fires at rate 1, resetting itself
and turning both neighbors on, and is wiped to 0 at leak rate gamma. The
integer process keeps the membrane potential: a site with positive
potential fires at rate 1, resetting its own counter to 0 and adding 1 to
each neighbor's, and a leak zeroes the counter. The bit process is exactly
the indicator potential > 0 of the integer process, pathwise, when both
are driven by the same event stream.

There is no time discretization: waiting times are competing exponentials,
so every trajectory is an exact realization of the jump process.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Boundary, ModelParams, SimulationError, SiteInterval
from .streams import ClockKind, EventStreams, Substream

SPIKE = "spike"
LEAK = "leak"


@dataclass
class WindowConfiguration:
    """Binary site states on a window, plus the boundary policy."""

    window: SiteInterval
    states: np.ndarray
    boundary: Boundary = Boundary.ACTIVE_GHOSTS

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=np.uint8)
        if self.states.shape != (len(self.window),):
            raise SimulationError("states length must match the window")
        if not np.all((self.states == 0) | (self.states == 1)):
            raise SimulationError("states must be 0/1")

    def state_at(self, site: int) -> int:
        if site not in self.window:
            raise SimulationError(f"site {site} outside window")
        return int(self.states[site - self.window.lo])

    def copy(self) -> "WindowConfiguration":
        return WindowConfiguration(self.window, self.states.copy(), self.boundary)


@dataclass
class PotentialWindow:
    """Membrane potentials and cumulative spike counts on a window."""

    window: SiteInterval
    potentials: np.ndarray
    spike_counts: np.ndarray | None = None
    boundary: Boundary = Boundary.ACTIVE_GHOSTS

    def __post_init__(self) -> None:
        self.potentials = np.asarray(self.potentials, dtype=np.int64)
        if self.potentials.shape != (len(self.window),):
            raise SimulationError("potentials length must match the window")
        if np.any(self.potentials < 0):
            raise SimulationError("potentials must be nonnegative integers")
        if self.spike_counts is None:
            self.spike_counts = np.zeros(len(self.window), dtype=np.int64)
        else:
            self.spike_counts = np.asarray(self.spike_counts, dtype=np.int64)
            if self.spike_counts.shape != (len(self.window),):
                raise SimulationError("spike_counts length must match the window")

    def copy(self) -> "PotentialWindow":
        return PotentialWindow(self.window, self.potentials.copy(),
                               self.spike_counts.copy(), self.boundary)


@dataclass
class ForwardTrajectory:
    """Ordered event log plus snapshots of one forward run.

    events: (time, site, kind) with kind "spike" or "leak"; ghost firings
    appear as spikes at the ghost coordinate just outside the window.
    snapshots: (time, state copy) at the requested sample times.
    final: state at the horizon.
    """

    events: list[tuple[float, int, str]] = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final: object | None = None
    horizon: float = 0.0


def _neighbor_indices(k: int, n: int, boundary: Boundary) -> tuple[int, int]:
    """Window-relative neighbors of k; -1 marks 'outside' for ghost policies."""
    if boundary is Boundary.PERIODIC:
        return (k - 1) % n, (k + 1) % n
    return (k - 1 if k > 0 else -1), (k + 1 if k < n - 1 else -1)


def apply_spike(config: WindowConfiguration, i: int) -> WindowConfiguration:
    """Firing map at site i: i goes to 0, both neighbors go to 1.

    The map is total; drivers only fire it at active sites. Neighbors
    falling outside the window are dropped (or wrapped, for periodic).
    """
    if i not in config.window:
        raise SimulationError(f"site {i} outside window")
    out = config.copy()
    n = len(config.window)
    k = i - config.window.lo
    out.states[k] = 0
    left, right = _neighbor_indices(k, n, config.boundary)
    if left >= 0:
        out.states[left] = 1
    if right >= 0:
        out.states[right] = 1
    return out


def apply_leak(config: WindowConfiguration, i: int) -> WindowConfiguration:
    """Leak map at site i: i goes to 0, nothing else changes."""
    if i not in config.window:
        raise SimulationError(f"site {i} outside window")
    out = config.copy()
    out.states[i - config.window.lo] = 0
    return out


def potential_spike(pw: PotentialWindow, i: int) -> PotentialWindow:
    """Firing at site i on the integer view: reset own counter, +1 to neighbors."""
    if i not in pw.window:
        raise SimulationError(f"site {i} outside window")
    out = pw.copy()
    n = len(pw.window)
    k = i - pw.window.lo
    out.potentials[k] = 0
    out.spike_counts[k] += 1
    left, right = _neighbor_indices(k, n, pw.boundary)
    if left >= 0:
        out.potentials[left] += 1
    if right >= 0:
        out.potentials[right] += 1
    return out


def potential_leak(pw: PotentialWindow, i: int) -> PotentialWindow:
    """Leak at site i on the integer view: counter reset to 0."""
    if i not in pw.window:
        raise SimulationError(f"site {i} outside window")
    out = pw.copy()
    out.potentials[i - pw.window.lo] = 0
    return out


def derive_eta(pw: PotentialWindow) -> WindowConfiguration:
    """Indicator view: bit i is 1 iff the potential at i is positive."""
    return WindowConfiguration(pw.window, (pw.potentials > 0).astype(np.uint8),
                               pw.boundary)


def _run_window(bits: list[int], window: SiteInterval, boundary: Boundary,
                gamma: float, horizon: float, stream: Substream,
                potentials: list[int] | None = None,
                spike_counts: list[int] | None = None,
                record: bool = True,
                snapshot_times: Sequence[float] | None = None,
                observer: Callable[[float, int, int], None] | None = None,
                snapshot_cb: Callable[[float, list[int]], None] | None = None):
    """Single event-driven pass over the window.

    The active-site bookkeeping drives both the binary and the integer
    view; when `potentials` is given it is updated in lock step, so runs
    with and without it consume the stream identically.
    """
    n = len(window)
    lo = window.lo
    if boundary is Boundary.PERIODIC and n < 3:
        raise SimulationError("periodic windows need at least 3 sites")
    if horizon < 0:
        raise SimulationError("horizon must be >= 0")

    active: list[int] = [k for k in range(n) if bits[k]]
    pos = [-1] * n
    for idx, k in enumerate(active):
        pos[k] = idx

    periodic = boundary is Boundary.PERIODIC
    n_ghost = 2 if boundary is Boundary.ACTIVE_GHOSTS else 0
    events: list[tuple[float, int, str]] = []
    snaps: list = []
    snap_iter = iter(sorted(snapshot_times) if snapshot_times else ())
    next_snap = next(snap_iter, None)
    track_x = potentials is not None

    def take_snaps(upto: float):
        nonlocal next_snap
        while next_snap is not None and next_snap <= upto:
            if snapshot_cb is not None:
                snapshot_cb(next_snap, bits)
            else:
                snaps.append((next_snap, bits.copy(),
                              potentials.copy() if track_x else None,
                              spike_counts.copy() if track_x else None))
            next_snap = next(snap_iter, None)

    def activate(k: int):
        if pos[k] < 0:
            pos[k] = len(active)
            active.append(k)
            bits[k] = 1

    def deactivate(k: int):
        p = pos[k]
        last = active.pop()
        if last != k:
            active[p] = last
            pos[last] = p
        pos[k] = -1
        bits[k] = 0

    t = 0.0
    uniform = stream.uniform
    log = math_log1p
    while True:
        n_active = len(active)
        total = n_active * (1.0 + gamma) + n_ghost
        if total <= 0.0:
            break  # absorbing: no clock can ever fire again
        u = uniform()
        while u == 0.0:
            u = uniform()
        t_next = t - log(-u) / total
        if t_next > horizon:
            take_snaps(horizon)
            t = horizon
            break
        take_snaps(t_next)
        t = t_next
        x = uniform() * total
        if x < n_active:
            # spike at an active site
            k = int(x)
            if k >= n_active:
                k = n_active - 1
            k = active[k]
            deactivate(k)
            if periodic:
                left, right = (k - 1) % n, (k + 1) % n
            else:
                left, right = (k - 1 if k > 0 else -1), (k + 1 if k < n - 1 else -1)
            if left >= 0:
                activate(left)
                if track_x:
                    potentials[left] += 1
            if right >= 0:
                activate(right)
                if track_x:
                    potentials[right] += 1
            if track_x:
                potentials[k] = 0
                spike_counts[k] += 1
            if record:
                events.append((t, lo + k, SPIKE))
            if observer is not None:
                observer(t, lo + k, 0)
        elif x < n_active * (1.0 + gamma):
            k = int((x - n_active) / gamma)
            if k >= n_active:
                k = n_active - 1
            k = active[k]
            deactivate(k)
            if track_x:
                potentials[k] = 0
            if record:
                events.append((t, lo + k, LEAK))
            if observer is not None:
                observer(t, lo + k, 1)
        elif n_ghost and x < n_active * (1.0 + gamma) + 1.0:
            activate(0)
            if track_x:
                potentials[0] += 1
            if record:
                events.append((t, lo - 1, SPIKE))
            if observer is not None:
                observer(t, lo - 1, 0)
        elif n_ghost:
            activate(n - 1)
            if track_x:
                potentials[n - 1] += 1
            if record:
                events.append((t, lo + n - 1 + 1, SPIKE))
            if observer is not None:
                observer(t, lo + n, 0)
        else:
            # top-edge rounding with no ghost band: last leak clock
            k = active[n_active - 1]
            deactivate(k)
            if track_x:
                potentials[k] = 0
            if record:
                events.append((t, lo + k, LEAK))
            if observer is not None:
                observer(t, lo + k, 1)
    take_snaps(horizon)
    return events, snaps


def math_log1p(x: float) -> float:
    import math

    return math.log1p(x)


def simulate_eta(initial: WindowConfiguration, params: ModelParams,
                 horizon: float, streams: EventStreams, replica: int,
                 record: bool = True,
                 snapshot_times: Sequence[float] | None = None,
                 observer=None, snapshot_cb=None) -> ForwardTrajectory:
    """Run the binary process from `initial` up to `horizon`.

    Each active site fires at rate 1 and leaks at rate gamma; the boundary
    policy of `initial` decides what happens at the window edges.
    """
    bits = initial.states.astype(np.int64).tolist()
    stream = streams.substream(replica, 0, ClockKind.RACE)
    events, snaps = _run_window(bits, initial.window, initial.boundary,
                                params.gamma, horizon, stream,
                                record=record, snapshot_times=snapshot_times,
                                observer=observer, snapshot_cb=snapshot_cb)
    traj = ForwardTrajectory(events=events, horizon=horizon)
    traj.snapshots = [
        (t, WindowConfiguration(initial.window, np.array(b, dtype=np.uint8),
                                initial.boundary))
        for (t, b, _x, _c) in snaps
    ]
    traj.final = WindowConfiguration(initial.window,
                                     np.array(bits, dtype=np.uint8),
                                     initial.boundary)
    return traj


def simulate_potential(initial: PotentialWindow, params: ModelParams,
                       horizon: float, streams: EventStreams, replica: int,
                       record: bool = True,
                       snapshot_times: Sequence[float] | None = None,
                       observer=None) -> tuple[PotentialWindow, ForwardTrajectory]:
    """Run the membrane-potential process from `initial` up to `horizon`.

    A site fires at rate 1 while its potential is positive; firing resets
    it and adds 1 to each neighbor, a leak resets it with no other effect.
    Driven by the same stream key as `simulate_eta`, the indicator of this
    process reproduces the binary run event for event.
    """
    potentials = initial.potentials.tolist()
    spike_counts = initial.spike_counts.tolist()
    bits = [1 if x > 0 else 0 for x in potentials]
    stream = streams.substream(replica, 0, ClockKind.RACE)
    events, snaps = _run_window(bits, initial.window, initial.boundary,
                                params.gamma, horizon, stream,
                                potentials=potentials, spike_counts=spike_counts,
                                record=record, snapshot_times=snapshot_times,
                                observer=observer)
    final = PotentialWindow(initial.window, np.array(potentials, dtype=np.int64),
                            np.array(spike_counts, dtype=np.int64),
                            initial.boundary)
    traj = ForwardTrajectory(events=events, horizon=horizon)
    traj.snapshots = [
        (t, PotentialWindow(initial.window, np.array(x, dtype=np.int64),
                            np.array(c, dtype=np.int64), initial.boundary))
        for (t, _b, x, c) in snaps
    ]
    traj.final = final
    return final, traj


def all_ones_window(window: SiteInterval,
                    boundary: Boundary = Boundary.ACTIVE_GHOSTS) -> WindowConfiguration:
    return WindowConfiguration(window, np.ones(len(window), dtype=np.uint8), boundary)


def all_ones_potential(window: SiteInterval,
                       boundary: Boundary = Boundary.ACTIVE_GHOSTS) -> PotentialWindow:
    return PotentialWindow(window, np.ones(len(window), dtype=np.int64),
                           boundary=boundary)


def trajectory_to_csv(traj: ForwardTrajectory, path: str) -> None:
    """Event log as CSV with header time,site,kind."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "site", "kind"])
        for t, site, kind in traj.events:
            writer.writerow([f"{t:.12g}", site, kind])


def snapshot_to_csv(state: WindowConfiguration | PotentialWindow, path: str) -> None:
    """State snapshot as CSV: site,state or site,potential,spikes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if isinstance(state, WindowConfiguration):
            writer.writerow(["site", "state"])
            for k, site in enumerate(state.window.sites()):
                writer.writerow([site, int(state.states[k])])
        else:
            writer.writerow(["site", "potential", "spikes"])
            for k, site in enumerate(state.window.sites()):
                writer.writerow([site, int(state.potentials[k]),
                                 int(state.spike_counts[k])])
