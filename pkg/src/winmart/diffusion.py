"""Seeded path simulation of martingale diffusions on [0, 1].

The central object is a chunked, counter-based-RNG driver: paths are
simulated in fixed blocks whose random streams depend only on (seed, path
index), so results are byte-identical across chunkings and worker counts.
Win-martingale dynamics use the Euler scheme

    M <- clamp(M + sigma(t, M) * sqrt(dt) * Z, 0, 1)

with the time argument taken at the interval midpoint (second-order for the
deterministic time factors and robust to volatility clocks with vanishing
initial speed), the state at the left node, exact-boundary states treated as
absorbed, and a path still interior at
the last grid node is completed to a terminal outcome by one independent
Bernoulli(M) draw, which preserves the terminal law exactly.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _backend, _rng
from .errors import ParameterError
from .grids import TimeGrid

# hard cap on materialised ensembles (elements); larger runs must stream
MAX_MATERIALIZED = 2**27


@dataclass(frozen=True)
class Separable:
    """Fast-path volatility structure sigma(t, x) = speed(t) * shape(x).

    kind 'sin'   : shape(x) = sin(pi * x)   (win-martingale family)
    kind 'const' : shape(x) = 1             (state-independent)
    """

    kind: str
    speed: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DiffusionSpec:
    """A win-martingale law given through its volatility surface on [0,1]^2.

    sigma(t, x) must vanish at x = 0 and x = 1 (absorbing boundaries) and
    accept vector x.  `separable`, when set, routes simulation through the
    compiled kernel.
    """

    sigma: Callable[[float, np.ndarray], np.ndarray]
    id: str
    separable: Optional[Separable] = None

    def __post_init__(self):
        for t in (0.0, 0.31, 0.97):
            for edge in (0.0, 1.0):
                if abs(float(self.sigma(t, edge))) > 1e-12:
                    raise ParameterError(
                        f"spec {self.id!r}: sigma({t}, {edge}) must vanish at the boundary"
                    )


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated paths on a grid plus completed terminal outcomes.

    values[p, k] is path p at grid node k, always inside [0, 1] for win
    ensembles.  `win` distinguishes clamped win-martingale ensembles (terminal
    in {0, 1}) from free ensembles such as Brownian motion (terminal = last
    node value).
    """

    grid: TimeGrid
    values: np.ndarray
    seed: int
    terminal: np.ndarray
    spec_id: str
    win: bool = True

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def x0(self) -> float:
        return float(self.values[0, 0])

    def interior_at_last(self) -> np.ndarray:
        m = self.values[:, -1]
        return (m > 0.0) & (m < 1.0)

    def validate(self, absorption: bool = True) -> None:
        """Check range and (optionally) absorption invariants; raises on failure."""
        v = self.values
        if self.win:
            if v.min() < 0.0 or v.max() > 1.0:
                raise ParameterError("win ensemble values must lie in [0, 1]")
            if not np.isin(self.terminal, (0.0, 1.0)).all():
                raise ParameterError("win ensemble terminal outcomes must be 0 or 1")
            if absorption:
                for edge in (0.0, 1.0):
                    hit = v == edge
                    # once at the boundary, stay there
                    ever = np.maximum.accumulate(hit, axis=1)
                    if not (hit == ever).all():
                        raise ParameterError("absorption invariant violated")


@dataclass
class StreamResult:
    """Per-path reductions from a streamed simulation."""

    m_last: np.ndarray
    integral: np.ndarray
    snap_m: np.ndarray
    snap_acc: np.ndarray
    values: Optional[np.ndarray] = None


def _resolve_speed(spec: DiffusionSpec, grid: TimeGrid) -> Optional[np.ndarray]:
    if spec.separable is None:
        return None
    return np.asarray(spec.separable.speed(grid.mid_times), dtype=np.float64)


def stream_paths(
    kind: int,
    integrand: int,
    grid: TimeGrid,
    x0: float,
    n_paths: int,
    seed: int,
    *,
    speed: Optional[np.ndarray] = None,
    aux0: Optional[np.ndarray] = None,
    aux1: Optional[np.ndarray] = None,
    snap_nodes: Optional[np.ndarray] = None,
    want_values: bool = False,
    sigma_callable: Optional[Callable] = None,
    backend=None,
    workers: Optional[int] = None,
    chunk_consumer: Optional[Callable] = None,
) -> StreamResult:
    """Drive the kernel over all path blocks.

    When `chunk_consumer` is given it receives (start, stop, values_chunk)
    per block and values are not retained globally.  Output arrays are
    written at block-disjoint slices, so any worker count produces identical
    bytes.
    """
    if n_paths < 1:
        raise ParameterError("n_paths must be >= 1")
    bk = _backend.get_backend(backend) if backend is None or isinstance(backend, str) else backend
    n_steps = grid.n_steps
    snap_idx = np.asarray(snap_nodes if snap_nodes is not None else [], dtype=np.int64)
    if snap_idx.size and (snap_idx.min() < 0 or snap_idx.max() > n_steps or (np.diff(snap_idx) <= 0).any()):
        raise ParameterError("snapshot nodes must be sorted and within the grid")
    keep_values = want_values and chunk_consumer is None
    if keep_values and n_paths * (n_steps + 1) > MAX_MATERIALIZED:
        raise ParameterError(
            f"materialising {n_paths} x {n_steps + 1} values exceeds the memory cap; "
            "use the streaming estimators"
        )

    empty = np.empty(0)
    speed_arr = empty if speed is None else np.ascontiguousarray(speed)
    aux0 = empty if aux0 is None else np.ascontiguousarray(aux0)
    aux1 = empty if aux1 is None else np.ascontiguousarray(aux1)
    if sigma_callable is None and speed_arr.size != n_steps:
        raise ParameterError("separable simulation needs one speed value per step")

    out = StreamResult(
        m_last=np.empty(n_paths),
        integral=np.empty(n_paths),
        snap_m=np.empty((n_paths, snap_idx.size)),
        snap_acc=np.empty((n_paths, snap_idx.size)),
        values=np.empty((n_paths, n_steps + 1)) if keep_values else None,
    )
    dts, sdts = grid.dts, grid.sqrt_dts

    def run_block(args):
        block, start, stop = args
        z = _rng.block_normals(seed, block, stop - start, n_steps)
        if sigma_callable is not None:
            vals, m, acc, sm, sa = _backend.reference.run_chunk_generic(
                sigma_callable, grid.mid_times, dts, sdts, z, x0, snap_idx,
                want_values, integrand == _backend.IG_ANALYTIC,
            )
        else:
            vals, m, acc, sm, sa = bk.run_chunk(
                kind, integrand, speed_arr, dts, sdts, aux0, aux1, z, x0,
                snap_idx, want_values,
            )
        out.m_last[start:stop] = m
        out.integral[start:stop] = acc
        if snap_idx.size:
            out.snap_m[start:stop] = sm
            out.snap_acc[start:stop] = sa
        if keep_values:
            out.values[start:stop] = vals
        elif chunk_consumer is not None and want_values:
            chunk_consumer(start, stop, vals)

    blocks = list(_rng.iter_blocks(n_paths))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, blocks))
    else:
        for b in blocks:
            run_block(b)
    return out


def complete_terminal(m_last: np.ndarray, seed: int, win: bool = True) -> np.ndarray:
    """Terminal outcomes: boundary states pass through; an interior state m
    is completed by an independent Bernoulli(m) draw (a one-step martingale
    coupling, so the terminal law is exact despite grid truncation)."""
    if not win:
        return m_last.copy()
    term = np.empty_like(m_last)
    for block, start, stop in _rng.iter_blocks(m_last.size):
        u = _rng.block_terminal_uniforms(seed, block, stop - start)
        m = m_last[start:stop]
        term[start:stop] = np.where(
            (m > 0.0) & (m < 1.0), (u < m).astype(np.float64), m
        )
    return term


def simulate_paths(
    spec: DiffusionSpec,
    grid: TimeGrid,
    x0: float,
    n_paths: int,
    seed: int,
    backend=None,
    workers: Optional[int] = None,
) -> PathEnsemble:
    """Euler simulation of a win-martingale spec; see module docstring."""
    if not 0.0 <= x0 <= 1.0:
        raise ParameterError(f"x0 {x0} outside [0, 1]")
    speed = _resolve_speed(spec, grid)
    res = stream_paths(
        _backend.KIND_SIN,
        _backend.IG_NONE,
        grid,
        x0,
        n_paths,
        seed,
        speed=speed,
        want_values=True,
        sigma_callable=None if spec.separable is not None else spec.sigma,
        backend=backend,
        workers=workers,
    )
    terminal = complete_terminal(res.m_last, seed, win=True)
    return PathEnsemble(
        grid=grid, values=res.values, seed=int(seed), terminal=terminal,
        spec_id=spec.id, win=True,
    )


def brownian_ensemble(
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    variance: float = 1.0,
    x0: float = 0.0,
    backend=None,
    workers: Optional[int] = None,
) -> PathEnsemble:
    """Unclamped Brownian motion with constant quadratic-variation density
    `variance`; terminal outcomes are the raw last-node values."""
    if variance <= 0:
        raise ParameterError("variance must be positive")
    speed = np.full(grid.n_steps, np.sqrt(variance))
    res = stream_paths(
        _backend.KIND_FREE, _backend.IG_NONE, grid, x0, n_paths, seed,
        speed=speed, want_values=True, backend=backend, workers=workers,
    )
    return PathEnsemble(
        grid=grid, values=res.values, seed=int(seed), terminal=res.m_last.copy(),
        spec_id=f"brownian-var{variance:g}", win=False,
    )


def realized_sigma2(ensemble: PathEnsemble) -> np.ndarray:
    """Realized quadratic-variation density per path and interval:
    (delta M)^2 / delta t.  Shape (n_paths, n_nodes - 1)."""
    inc = np.diff(ensemble.values, axis=1)
    return inc * inc / ensemble.grid.dts


def interior_intervals(ensemble: PathEnsemble) -> np.ndarray:
    """Mask of intervals whose left endpoint is strictly inside (0, 1)."""
    left = ensemble.values[:, :-1]
    return (left > 0.0) & (left < 1.0)


def write_paths_csv(ensemble: PathEnsemble, fh, config: Optional[dict] = None) -> None:
    """Long-format CSV `path,t,value`; a config comment line records provenance."""
    if config is not None:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    fh.write("path,t,value\n")
    nodes = ensemble.grid.nodes
    for p in range(ensemble.n_paths):
        row = ensemble.values[p]
        for t, v in zip(nodes, row):
            fh.write(f"{p},{t!r},{v!r}\n")


def write_terminal_csv(ensemble: PathEnsemble, fh, config: Optional[dict] = None) -> None:
    if config is not None:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    fh.write("path,terminal\n")
    for p, v in enumerate(ensemble.terminal):
        fh.write(f"{p},{v!r}\n")
