"""Time grids on [0, 1) for martingale diffusions.

The unit time interval carries a singularity at t = 1 (the volatility of the
processes simulated here scales like (1-t)^{-1/2}), so the default grid is
geometric: the distance to 1 decays by a constant factor per step, which keeps
step/(1-t) bounded and concentrates roughly two thirds of the nodes in the
last percent of game time.  Grids stop at 1 - epsilon_final; the leftover
interval is handled by the entropy module's tail bracket.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

DEFAULT_EPSILON = 2.0**-20


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time nodes on [start_time, 1).

    nodes[0] == start_time and nodes[-1] == 1 - epsilon_final.
    """

    nodes: np.ndarray
    mode: str
    epsilon_final: float
    start_time: float = 0.0
    dts: np.ndarray = field(init=False, repr=False)
    sqrt_dts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ParameterError("grid needs at least two nodes")
        dts = np.diff(nodes)
        if not (dts > 0).all():
            raise ParameterError("grid nodes must be strictly increasing")
        if nodes[0] != self.start_time:
            raise ParameterError("nodes[0] must equal start_time")
        if nodes[-1] >= 1.0 or nodes[0] < 0.0:
            raise ParameterError("grid nodes must lie in [0, 1)")
        object.__setattr__(self, "dts", dts)
        object.__setattr__(self, "sqrt_dts", np.sqrt(dts))

    @property
    def n_steps(self) -> int:
        return self.nodes.size - 1

    @property
    def mid_times(self) -> np.ndarray:
        """Interval midpoints: where per-step time factors are evaluated.
        Midpoints keep time integrals second-order accurate and stay clear of
        integrable endpoint singularities (e.g. a volatility clock with
        vanishing initial speed)."""
        return self.nodes[:-1] + 0.5 * self.dts

    @property
    def t_last(self) -> float:
        return float(self.nodes[-1])

    @property
    def label(self) -> str:
        return f"{self.mode}-{self.n_steps}@{self.start_time:g}-eps{self.epsilon_final:.3g}"


def make_grid(
    start_time: float,
    n_steps: int,
    mode: str = "geometric",
    epsilon_final: float = DEFAULT_EPSILON,
) -> TimeGrid:
    """Build a time grid from start_time to 1 - epsilon_final.

    uniform   : equally spaced nodes.
    geometric : (1 - t_k) = (1 - start_time) * r^k with a constant ratio r,
                so the grid refines toward t = 1 and step/(1-t) = 1 - r is
                constant.

    Raises ParameterError for out-of-range arguments.
    """
    if not 0.0 <= start_time < 1.0:
        raise ParameterError(f"start_time {start_time} outside [0, 1)")
    if epsilon_final <= 0.0 or start_time >= 1.0 - epsilon_final:
        raise ParameterError("need 0 <= start_time < 1 - epsilon_final and epsilon_final > 0")
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")

    if mode == "uniform":
        nodes = np.linspace(start_time, 1.0 - epsilon_final, n_steps + 1)
    elif mode == "geometric":
        d0 = 1.0 - start_time
        ratio = (epsilon_final / d0) ** (1.0 / n_steps)
        nodes = 1.0 - d0 * ratio ** np.arange(n_steps + 1)
        nodes[0] = start_time
        nodes[-1] = 1.0 - epsilon_final
        # float roundoff can make late nodes collide once 1 - t approaches
        # machine epsilon relative to 1; forbid such grids outright
        if not (np.diff(nodes) > 0).all():
            raise ParameterError("epsilon_final too small for this step count")
    else:
        raise ParameterError(f"unknown grid mode {mode!r}")
    return TimeGrid(nodes=nodes, mode=mode, epsilon_final=float(epsilon_final), start_time=float(start_time))
