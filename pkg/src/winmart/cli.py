"""Command-line front end.

Data-only outputs (CSV / JSON); every stochastic command requires an explicit
seed and embeds its full configuration in the artifact, so identical
configurations give byte-identical files.  The WINMART_THREADS environment
variable sets the worker count for path simulation and never changes
results.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, discrete_mot, entropy, value
from .diffusion import brownian_ensemble, simulate_paths, write_paths_csv, write_terminal_csv
from .errors import (
    EvaluationError,
    InfeasibleError,
    InsufficientDataError,
    NumericalError,
    ParameterError,
)
from .grids import DEFAULT_EPSILON, make_grid
from .martingales import bass_initial_b, bass_transform, spec_from_id

_MUTE = (NumericalError, EvaluationError, InfeasibleError, InsufficientDataError)


def _workers() -> int | None:
    raw = os.environ.get("WINMART_THREADS")
    return int(raw) if raw else None


def _fail(exc: Exception) -> None:
    json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
    sys.stderr.write("\n")
    sys.exit(1)


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


def _report(config: dict, results) -> dict:
    return {"version": __version__, "config": config, "results": results}


@click.group()
@click.version_option(version=__version__)
def main():
    """Win-martingale simulation, entropy estimation and certificates."""


@main.command("value")
@click.option("--x0", type=float, required=True, help="initial win probability in (0, 1)")
@click.option("--s", "start_time", type=float, default=0.0, show_default=True,
              help="evaluation time for the value surface")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="write a JSON report instead of printing the number")
def value_cmd(x0, start_time, out):
    """Print the minimal specific relative entropy from (s, x0)."""
    try:
        val = value.optimal_value(x0) if start_time == 0.0 else value.v_bar(start_time, x0)
    except ParameterError as exc:
        raise click.UsageError(str(exc))
    if out:
        cfg = {"command": "value", "x0": x0, "s": start_time}
        _emit_json(_report(cfg, {"value": val}), out)
    else:
        click.echo(f"{val:.7f}")


def _build_ensemble(spec_id, x0, n_paths, n_steps, eps, grid_mode, seed, workers):
    grid = make_grid(0.0, n_steps, grid_mode, eps)
    if spec_id == "bass":
        bm = brownian_ensemble(grid, n_paths, seed, x0=bass_initial_b(x0), workers=workers)
        return bass_transform(bm)
    return simulate_paths(spec_from_id(spec_id), grid, x0, n_paths, seed, workers=workers)


@main.command()
@click.option("--spec", "spec_id", default="aldous", show_default=True,
              help="aldous | bass | aldous-tc:<name>")
@click.option("--x0", type=float, default=0.5, show_default=True)
@click.option("--paths", "n_paths", type=int, default=2, show_default=True)
@click.option("--steps", "n_steps", type=int, default=4096, show_default=True)
@click.option("--grid", "grid_mode", default="geometric", show_default=True,
              type=click.Choice(["geometric", "uniform"]))
@click.option("--eps", type=float, default=DEFAULT_EPSILON, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--terminal-out", type=click.Path(dir_okay=False), default=None)
def simulate(spec_id, x0, n_paths, n_steps, grid_mode, eps, seed, out, terminal_out):
    """Simulate paths and write them as CSV (path,t,value)."""
    cfg = {"command": "simulate", "spec_id": spec_id, "x0": x0, "n_paths": n_paths,
           "n_steps": n_steps, "grid": grid_mode, "epsilon_final": eps, "seed": seed}
    try:
        if not 0 < x0 < 1:
            raise ParameterError("x0 must be inside (0, 1)")
        ens = _build_ensemble(spec_id, x0, n_paths, n_steps, eps, grid_mode, seed, _workers())
    except ParameterError as exc:
        raise click.UsageError(str(exc))
    except _MUTE as exc:
        _fail(exc)
    with open(out, "w") as fh:
        write_paths_csv(ens, fh, config=cfg)
    if terminal_out:
        with open(terminal_out, "w") as fh:
            write_terminal_csv(ens, fh, config=cfg)


@main.command("entropy")
@click.option("--spec", "spec_id", default="aldous", show_default=True,
              help="aldous | bass | aldous-tc:<name> | constvol:<a>")
@click.option("--x0", type=float, default=0.5, show_default=True)
@click.option("--paths", "n_paths", type=int, default=100_000, show_default=True)
@click.option("--steps", "n_steps", type=int, default=4096, show_default=True)
@click.option("--eps", type=float, default=DEFAULT_EPSILON, show_default=True)
@click.option("--mode", default="analytic", show_default=True,
              type=click.Choice(["analytic", "realized"]))
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def entropy_cmd(spec_id, x0, n_paths, n_steps, eps, mode, seed, out):
    """Estimate the specific-entropy functional of a spec."""
    cfg = {"command": "entropy", "spec_id": spec_id, "x0": x0, "n_paths": n_paths,
           "n_steps": n_steps, "epsilon_final": eps, "mode": mode, "seed": seed}
    try:
        grid = make_grid(0.0, n_steps, "geometric", eps)
        est = entropy.estimate_entropy(
            spec_id, x0, n_paths, seed=seed, grid=grid, mode=mode, workers=_workers())
    except ParameterError as exc:
        raise click.UsageError(str(exc))
    except _MUTE as exc:
        _fail(exc)
    results = est.to_dict()
    results.update({"x0": x0, "seed": seed, "n_steps": n_steps})
    _emit_json(_report(cfg, results), out)


@main.command()
@click.option("--suite", default="all", show_default=True,
              type=click.Choice(["all", "value", "pde", "martingale"]))
@click.option("--seed", type=int, default=2026, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def check(suite, seed, out):
    """Run certificate suites; exits nonzero when any certificate fails."""
    cfg = {"command": "check", "suite": suite, "seed": seed}
    try:
        certs = value.run_certificates(suite, seed=seed)
    except ParameterError as exc:
        raise click.UsageError(str(exc))
    except _MUTE as exc:
        _fail(exc)
    results = [c.to_dict() for c in certs]
    _emit_json(_report(cfg, results), out)
    if any(c.verdict != "pass" for c in certs):
        sys.exit(1)


@main.command()
@click.option("--problem", "problem_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="JSON file {states, T, mu, nu, ref_var[, f0]}")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="kernel dump CSV (step,from,to,prob)")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--max-iters", type=int, default=2000, show_default=True)
@click.option("--tol", type=float, default=1e-7, show_default=True)
@click.option("--prob-floor", type=float, default=1e-16, show_default=True,
              help="omit kernel entries below this probability")
def discrete(problem_path, out, report_path, max_iters, tol, prob_floor):
    """Solve the discrete entropic martingale-transport problem."""
    cfg = {"command": "discrete", "problem": str(problem_path),
           "max_iters": max_iters, "tol": tol}
    try:
        prob = discrete_mot.DiscreteMartingaleProblem.from_json(Path(problem_path).read_text())
        coupling = discrete_mot.solve_entropic_mot(prob, max_iters=max_iters, tol=tol)
    except ParameterError as exc:
        raise click.UsageError(str(exc))
    except _MUTE as exc:
        _fail(exc)
    states = prob.states
    with open(out, "w") as fh:
        fh.write("# config: " + json.dumps(cfg, sort_keys=True) + "\n")
        fh.write("step,from,to,prob\n")
        for t in range(prob.n_steps):
            k = coupling.kernels[t]
            for i in range(states.size):
                for j in range(states.size):
                    if k[i, j] >= prob_floor:
                        fh.write(f"{t},{states[i]!r},{states[j]!r},{k[i, j]!r}\n")
    if report_path:
        results = {
            "kl": coupling.objective_trace[-1],
            "objective_trace": coupling.objective_trace,
            "terminal_tv": coupling.terminal_tv,
            "mean_residual": coupling.mean_residual,
            "n_sweeps": coupling.n_sweeps,
            "converged": coupling.converged,
        }
        _emit_json(_report(cfg, results), report_path)
    if not coupling.converged:
        _fail(NumericalError("projection sweeps did not reach the target residuals"))


@main.command()
@click.option("--x0", type=float, default=0.5, show_default=True)
@click.option("--paths", "n_paths", type=int, default=2, show_default=True)
@click.option("--steps", "n_steps", type=int, default=4096, show_default=True)
@click.option("--eps", type=float, default=DEFAULT_EPSILON, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def compare(x0, n_paths, n_steps, eps, seed, out_dir):
    """Export matched path samples of the optimizer and the Bass martingale."""
    cfg = {"command": "compare", "x0": x0, "n_paths": n_paths, "n_steps": n_steps,
           "epsilon_final": eps, "seed": seed}
    outdir = Path(out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if not 0 < x0 < 1:
            raise ParameterError("x0 must be inside (0, 1)")
        for spec_id in ("aldous", "bass"):
            ens = _build_ensemble(spec_id, x0, n_paths, n_steps, eps, "geometric",
                                  seed, _workers())
            with open(outdir / f"{spec_id}_paths.csv", "w") as fh:
                write_paths_csv(ens, fh, config={**cfg, "spec_id": spec_id})
            with open(outdir / f"{spec_id}_terminal.csv", "w") as fh:
                write_terminal_csv(ens, fh, config={**cfg, "spec_id": spec_id})
    except ParameterError as exc:
        raise click.UsageError(str(exc))
    except _MUTE as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
