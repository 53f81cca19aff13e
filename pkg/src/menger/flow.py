"""Length-constrained gradient descent preserving embeddedness.

Each step takes the projected gradient, backtracks on the exact discrete
energy (Armijo), rejects candidates whose non-adjacent strands come closer
than a fraction of the mean edge length, then rescales the accepted curve
to unit length.  Arc-length resampling runs on a configurable cadence; its
(small) energy perturbation is logged per step rather than hidden inside
the line search, so accepted decreases stay guaranteed.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import EnergyParams, _energy_of_vertices
from .errors import StepFailure
from .geometry import ClosedCurve, min_segment_distance, resample_arclength
from .variation import GradientField, pairing, projected_gradient

_MIN_STEP = 1e-14


@dataclass(frozen=True)
class FlowConfig:
    params: EnergyParams
    max_steps: int = 500
    initial_step: float = 0.05
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    resample_every: int = 10
    guard_distance_factor: float = 0.2
    residual_tol: float = 1e-3
    snapshot_every: int = 50

    def __post_init__(self):
        if self.max_steps < 0:
            raise ValueError("max_steps must be nonnegative")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.resample_every < 1:
            raise ValueError("resample_every must be at least 1")
        if self.guard_distance_factor <= 0:
            raise ValueError("guard_distance_factor must be positive")
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be at least 1")


@dataclass(frozen=True)
class FlowState:
    curve: ClosedCurve
    step_index: int
    energy: float
    residual: float
    lam: float
    guard_trips: int
    step_size: float
    terminated: bool = False


@dataclass(frozen=True)
class StepRecord:
    step: int
    energy: float
    residual: float
    lam: float
    step_size: float
    min_dist: float
    energy_accepted: float
    resample_perturbation: float

    def csv_row(self):
        # fixed public column set: step,energy,residual,lambda,step_size,min_dist
        return [self.step, self.energy, self.residual, self.lam, self.step_size, self.min_dist]


@dataclass
class FlowResult:
    state: FlowState
    history: list
    snapshots: list


def initial_state(curve: ClosedCurve, config: FlowConfig) -> FlowState:
    """Normalize the input (arc-length, unit length) and evaluate it."""
    curve = resample_arclength(curve, curve.N).scaled_to_length(1.0)
    pg = projected_gradient(curve, config.params)
    energy = _energy_of_vertices(curve.vertices, config.params)
    return FlowState(
        curve=curve,
        step_index=0,
        energy=energy,
        residual=pg.residual,
        lam=pg.lam,
        guard_trips=0,
        step_size=config.initial_step,
        terminated=pg.residual < config.residual_tol,
    )


def flow_step(state: FlowState, config: FlowConfig) -> tuple[FlowState, StepRecord | None]:
    """One accepted descent step, or the unchanged state once converged.

    Raises
    ------
    StepFailure
        If backtracking underflows below 1e-14 without an acceptable step.
    """
    params = config.params
    curve = state.curve
    X = curve.vertices
    N = curve.N

    pg = projected_gradient(curve, params)
    if pg.residual < config.residual_tol:
        new_state = replace(state, residual=pg.residual, lam=pg.lam, terminated=True)
        return new_state, None

    direction = pg.field.vectors
    decrease = pairing(pg.field, pg.field)
    energy0 = state.energy
    tau = state.step_size
    guard_trips = state.guard_trips

    accepted = None
    while tau >= _MIN_STEP:
        Xc = X - tau * direction
        try:
            candidate = ClosedCurve(Xc)
        except ValueError:
            guard_trips += 1
            tau *= 0.5
            continue
        min_dist = min_segment_distance(candidate)
        if min_dist < config.guard_distance_factor * candidate.mean_edge_length:
            guard_trips += 1
            tau *= 0.5
            continue
        energy_candidate = _energy_of_vertices(Xc, params)
        if energy_candidate <= energy0 - config.armijo_c * tau * decrease:
            accepted = (candidate, energy_candidate, min_dist)
            break
        tau *= config.backtrack_factor
    if accepted is None:
        raise StepFailure(
            f"step size underflowed below {_MIN_STEP:g} at step {state.step_index} "
            f"(residual {pg.residual:.3e}, energy {energy0:.6g})",
            state=state,
        )

    candidate, energy_accepted, min_dist = accepted
    candidate = candidate.scaled_to_length(1.0)
    energy_post = _energy_of_vertices(candidate.vertices, params)

    step_index = state.step_index + 1
    resample_perturbation = 0.0
    if step_index % config.resample_every == 0:
        resampled = resample_arclength(candidate, N)
        energy_resampled = _energy_of_vertices(resampled.vertices, params)
        resample_perturbation = energy_resampled - energy_post
        candidate, energy_post = resampled, energy_resampled
        min_dist = min_segment_distance(candidate)

    new_state = FlowState(
        curve=candidate,
        step_index=step_index,
        energy=energy_post,
        residual=pg.residual,
        lam=pg.lam,
        guard_trips=guard_trips,
        step_size=min(2.0 * tau, config.initial_step),
    )
    record = StepRecord(
        step=step_index,
        energy=energy_post,
        residual=pg.residual,
        lam=pg.lam,
        step_size=tau,
        min_dist=min_dist,
        energy_accepted=energy_accepted,
        resample_perturbation=resample_perturbation,
    )
    return new_state, record


def run_flow(curve: ClosedCurve, config: FlowConfig, output_dir: str | None = None) -> FlowResult:
    """Iterate flow steps until the residual tolerance or max_steps.

    Snapshots are collected every ``snapshot_every`` accepted steps (plus
    the initial and final curves); with ``output_dir`` set they are written
    as ``snap_<k>.json`` next to ``history.csv``.
    """
    state = initial_state(curve, config)
    history: list[StepRecord] = []
    snapshots: list[tuple[int, ClosedCurve]] = [(0, state.curve)]
    for _ in range(config.max_steps):
        if state.terminated:
            break
        try:
            state, record = flow_step(state, config)
        except StepFailure as exc:
            exc.history = history
            raise
        if record is None:
            break
        history.append(record)
        if state.step_index % config.snapshot_every == 0:
            snapshots.append((state.step_index, state.curve))
    if not snapshots or snapshots[-1][0] != state.step_index:
        snapshots.append((state.step_index, state.curve))
    result = FlowResult(state=state, history=history, snapshots=snapshots)
    if output_dir is not None:
        write_outputs(result, output_dir)
    return result


def write_outputs(result: FlowResult, output_dir: str) -> None:
    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "history.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "energy", "residual", "lambda", "step_size", "min_dist"])
        for rec in result.history:
            writer.writerow(rec.csv_row())
    for step, snap in result.snapshots:
        path = os.path.join(output_dir, f"snap_{step}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(snap.to_json())
    summary = {
        "steps": result.state.step_index,
        "energy": result.state.energy,
        "residual": result.state.residual,
        "lambda": result.state.lam,
        "guard_trips": result.state.guard_trips,
        "terminated": result.state.terminated,
        "energy_history": [rec.energy for rec in result.history],
    }
    with open(os.path.join(output_dir, "flow_report.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
