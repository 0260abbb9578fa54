"""SOE x time discretisation and the aggregate fleet state.

Densities live on ``n_bins`` grid points ``x_k = k * dx`` spanning [0, 1] and
are measured in vehicles per unit SOE, so a bin holds ``density * dx``
vehicles (rectangle rule).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DimensionError, InfeasibleControlError, ValidationError

DEFAULT_NODES = ("I", "II", "IV")
DENSITY_FLOOR = 1e-9


@dataclass(frozen=True)
class SoeGrid:
    n_bins: int = 6
    dt_minutes: float = 10.0
    horizon_steps: int = 5
    n_sim_steps: int = 144

    def __post_init__(self):
        if self.n_bins < 2:
            raise ConfigurationError("need at least two SOE grid points")
        if not self.dt_minutes > 0:
            raise ConfigurationError(f"dt_minutes must be positive, got {self.dt_minutes}")
        if self.horizon_steps < 1:
            raise ConfigurationError(f"horizon_steps must be >= 1, got {self.horizon_steps}")
        if self.n_sim_steps < 0:
            raise ConfigurationError("n_sim_steps must be >= 0")

    @classmethod
    def from_dx(cls, dx: float = 0.2, **kw) -> "SoeGrid":
        n = int(round(1.0 / dx)) + 1
        if abs(dx * (n - 1) - 1.0) > 1e-12:
            raise ConfigurationError(f"dx={dx} does not divide [0, 1] into whole bins")
        return cls(n_bins=n, **kw)

    @property
    def dx(self) -> float:
        return 1.0 / (self.n_bins - 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.dx

    @property
    def dt_seconds(self) -> float:
        return 60.0 * self.dt_minutes


@dataclass(frozen=True)
class TransitEntry:
    """Vehicles on the road, due to land in ``destination``'s idle curve."""

    origin: str
    destination: str
    arrival_step: int
    arrival_bin: int
    vehicle_count: float
    with_passengers: bool

    @property
    def key(self):
        return (self.origin, self.destination, self.arrival_step, self.arrival_bin, self.with_passengers)


def merge_transit(entries) -> tuple:
    """Combine entries sharing (origin, destination, step, bin, passenger flag)."""
    acc: dict = {}
    for e in entries:
        acc[e.key] = acc.get(e.key, 0.0) + e.vehicle_count
    return tuple(
        TransitEntry(o, d, s, b, n, p) for (o, d, s, b, p), n in sorted(acc.items(), key=lambda kv: kv[0]) if n > 0
    )


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FleetState:
    """Charging (u), idle (v) and discharging (w) densities, shape (nodes, bins)."""

    nodes: tuple
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    in_transit: tuple = ()
    step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        for name in ("u", "v", "w"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if not (self.u.shape == self.v.shape == self.w.shape) or self.u.ndim != 2:
            raise DimensionError(f"u, v, w must share a 2-d shape; got {self.u.shape}, {self.v.shape}, {self.w.shape}")
        if self.u.shape[0] != len(self.nodes):
            raise DimensionError(f"{len(self.nodes)} nodes but densities have {self.u.shape[0]} rows")
        object.__setattr__(self, "in_transit", merge_transit(self.in_transit))
        stale = [e for e in self.in_transit if e.arrival_step <= self.step]
        if stale:
            raise ValidationError(f"transit entry due at step {stale[0].arrival_step} in a state at step {self.step}")

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_bins(self):
        return self.u.shape[1]

    def node_index(self, label):
        return self.nodes.index(label)

    def check_grid(self, grid: SoeGrid):
        if self.u.shape[1] != grid.n_bins:
            raise DimensionError(f"state has {self.u.shape[1]} bins, grid has {grid.n_bins}")

    def with_(self, **kw) -> "FleetState":
        return replace(self, **kw)

    def pending(self, arrival_step):
        return [e for e in self.in_transit if e.arrival_step == arrival_step]


def clamp_floor(a: np.ndarray, what: str, floor: float = DENSITY_FLOOR) -> np.ndarray:
    """Zero out round-off negatives; raise for anything below ``-floor``.

    ``floor`` is relative to the largest magnitude in ``a`` (at least 1), so a
    7,500-vehicle fleet gets the same relative slack as a toy one.
    """
    tol = floor * max(1.0, float(np.abs(a).max(initial=0.0)))
    lo = a.min(initial=0.0)
    if lo < -tol:
        idx = np.unravel_index(np.argmin(a), a.shape)
        raise InfeasibleControlError(f"{what} density {lo:.3e} below floor at index {idx}")
    return np.where(a < 0, 0.0, a)


def empty_state(nodes, grid: SoeGrid) -> FleetState:
    z = np.zeros((len(nodes), grid.n_bins))
    return FleetState(tuple(nodes), z, z, z)


def total_vehicles(state: FleetState, grid: SoeGrid) -> float:
    """Vehicles on the curves (rectangle rule) plus vehicles in transit."""
    state.check_grid(grid)
    on_curves = (state.u.sum() + state.v.sum() + state.w.sum()) * grid.dx
    return float(on_curves + sum(e.vehicle_count for e in state.in_transit))


def init_uniform_idle(fleet_size, grid: SoeGrid, nodes=DEFAULT_NODES, weights=None) -> FleetState:
    """Spread ``fleet_size`` idle vehicles uniformly over SOE at each node."""
    nodes = tuple(nodes)
    if weights is None:
        w = np.full(len(nodes), 1.0 / len(nodes))
    elif isinstance(weights, dict):
        missing = set(nodes) - set(weights)
        if missing:
            raise ValidationError(f"initial weights missing for nodes {sorted(missing)}")
        w = np.array([weights[n] for n in nodes], dtype=float)
    else:
        w = np.asarray(weights, dtype=float)
    if w.shape != (len(nodes),):
        raise ValidationError(f"need one weight per node ({len(nodes)}), got {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError(f"node weights must be nonnegative and sum to 1 (sum={w.sum()!r})")
    if fleet_size < 0:
        raise ValidationError("fleet_size must be nonnegative")
    per_bin = fleet_size * w / (grid.n_bins * grid.dx)
    v = np.repeat(per_bin[:, None], grid.n_bins, axis=1)
    z = np.zeros_like(v)
    return FleetState(nodes, z, v, z)
