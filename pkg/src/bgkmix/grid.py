"""Phase-space discretization: periodic 1D space times a truncated velocity lattice."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigurationError, DimensionError


@dataclass(frozen=True)
class GridConfig:
    velocity_dim: int = 1
    v_max: float = 8.0
    n_nodes_per_axis: int = 64
    n_cells: int = 1
    domain_length: float = 1.0


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Immutable phase grid.

    Velocity nodes are cell-centred on ``[-v_max, v_max]^d`` with uniform
    midpoint weights ``h^d``. Nodes are stored flattened in C order, so
    ``nodes[j]`` is a length-``d`` vector and ``weights[j]`` its weight.
    """

    domain_length: float
    n_cells: int
    velocity_dim: int
    v_max: float
    n_nodes_per_axis: int
    axis: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    spatial_dim: int = 1

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.n_nodes_per_axis

    @property
    def dx(self) -> float:
        return self.domain_length / self.n_cells

    @property
    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def speed2(self) -> np.ndarray:
        """|v|^2 at every node."""
        return np.einsum("ij,ij->i", self.nodes, self.nodes)

    @property
    def speed(self) -> np.ndarray:
        return np.sqrt(self.speed2)

    @property
    def mirror_index(self) -> np.ndarray:
        """Index map j -> j' with nodes[j'] = -nodes[j]."""
        shape = (self.n_nodes_per_axis,) * self.velocity_dim
        idx = np.arange(self.n_nodes).reshape(shape)
        return idx[(slice(None, None, -1),) * self.velocity_dim].ravel()

    def key(self) -> tuple:
        return (self.domain_length, self.n_cells, self.velocity_dim,
                self.v_max, self.n_nodes_per_axis)

    def same_as(self, other: "PhaseGrid") -> bool:
        return self is other or self.key() == other.key()


def build_grid(config: GridConfig | Mapping[str, Any] | None = None, **overrides) -> PhaseGrid:
    """Build a :class:`PhaseGrid` from a :class:`GridConfig` or a mapping.

    ``n_cells = 1`` is accepted and denotes a space-homogeneous run.
    """
    if config is None:
        config = GridConfig()
    if isinstance(config, Mapping):
        unknown = set(config) - set(GridConfig.__dataclass_fields__)
        if unknown:
            raise ConfigurationError("unknown grid key", key=sorted(unknown)[0])
        config = GridConfig(**config)
    if overrides:
        config = GridConfig(**{**config.__dict__, **overrides})

    d = config.velocity_dim
    if d not in (1, 2, 3):
        raise ConfigurationError("velocity_dim must be 1, 2 or 3", key="velocity_dim")
    n = config.n_nodes_per_axis
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ConfigurationError(f"must be an integer >= 2, got {n!r}", key="n_nodes_per_axis")
    if not isinstance(config.n_cells, (int, np.integer)) or config.n_cells < 1:
        raise ConfigurationError(f"must be an integer >= 1, got {config.n_cells!r}", key="n_cells")
    if not config.v_max > 0:
        raise ConfigurationError(f"must be positive, got {config.v_max!r}", key="v_max")
    if not config.domain_length > 0:
        raise ConfigurationError(f"must be positive, got {config.domain_length!r}",
                                 key="domain_length")

    h = 2.0 * config.v_max / n
    axis = -config.v_max + (np.arange(n) + 0.5) * h
    # exact antisymmetry of the axis: mirror the upper half onto the lower half
    axis[: n // 2] = -axis[::-1][: n // 2]
    if n % 2:
        axis[n // 2] = 0.0
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    weights = np.full(nodes.shape[0], h ** d)
    for arr in (axis, nodes, weights):
        arr.setflags(write=False)
    return PhaseGrid(domain_length=float(config.domain_length), n_cells=int(config.n_cells),
                     velocity_dim=d, v_max=float(config.v_max), n_nodes_per_axis=int(n),
                     axis=axis, nodes=nodes, weights=weights)


def compensated_sum(values, axis: int = -1):
    """Sum along ``axis`` with a fixed-order pairwise TwoSum reduction.

    Rounding errors of every pairwise addition are captured exactly and
    added back at the end, which gives roughly double-double accuracy.
    The reduction tree depends only on the array length, so results are
    bit-reproducible.
    """
    x = np.ascontiguousarray(np.moveaxis(np.asarray(values, dtype=float), axis, -1))
    err = np.zeros(x.shape[:-1])
    if x.shape[-1] == 0:
        return err if err.ndim else 0.0
    while x.shape[-1] > 1:
        if x.shape[-1] % 2:
            x = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
        a = x[..., 0::2]
        b = x[..., 1::2]
        s = a + b
        bb = s - a
        err = err + ((a - (s - bb)) + (b - bb)).sum(axis=-1)
        x = s
    out = x[..., 0] + err
    return float(out) if out.ndim == 0 else out


def quad_integrate(values, grid: PhaseGrid):
    """Velocity quadrature ``sum_j w_j values_j`` over the last axis.

    Leading axes (e.g. spatial cells) are kept, so a ``(n_cells, n_nodes)``
    array gives one integral per cell.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 0 or values.shape[-1] != grid.n_nodes:
        raise DimensionError(f"expected trailing length {grid.n_nodes}, got shape {values.shape}")
    return compensated_sum(values * grid.weights, axis=-1)
