"""Prime-mover accumulation dynamics and scenario simulation.

Each period the static problem is solved with the current stocks, the
per-mover marginal surplus phi_l = phi * eps_l / (1 - phi) is computed, and
stocks grow by dx/dt = r_l * tanh(phi_l / eps_ref) * x_l integrated with
forward Euler inside the period.  The tanh argument is normalized by a
configurable reference (each mover's own direct energy by default) so it is
dimensionless.  Growth stops at the steady state: no marginal surplus left
on any good and negligible accumulation on every mover.

Scheduled events (efficiency gains, curve deterioration, discoveries,
endowment shocks) apply at the start of their period, before the solve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

from .core import (EconomyState, EventSpec, PrimeMoverType, ScenarioConfig,
                   activate_due, aggregate_power, initial_state)
from .demand import DemandSolution, demand_for_state
from .errors import EglError, ScenarioValidationError
from .surplus import EnergySideSolution, mover_surplus_rates, solve_energy_side

log = logging.getLogger("egl.growth")


@dataclass(frozen=True)
class PeriodRecord:
    """Snapshot of one simulated period (pre-accumulation stocks)."""

    t: int
    stocks: dict[str, float]
    phi: float
    mover_surplus: dict[str, float]
    outputs: dict[str, float]
    marginal_surplus: dict[str, float]
    meroi: dict[str, float | None]
    usable_surplus: float
    gross_income: float
    gross_expenditure: float
    bundle: dict[str, float]
    lam: float | None
    power: float
    cum_extraction: dict[str, float]
    usability_slack: float
    binding_constraints: dict[str, str]


@dataclass(frozen=True)
class Trajectory:
    """Per-period records plus steady-state / failure diagnostics."""

    records: tuple[PeriodRecord, ...]
    steady_state: dict | None = None
    diagnostic: dict | None = None

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.records]


def step_accumulation(stocks: dict[str, float],
                      surplus_args: dict[str, float],
                      movers: dict[str, PrimeMoverType],
                      substeps: int = 1) -> dict[str, float]:
    """Advance stocks one period; ``surplus_args`` are the dimensionless
    tanh arguments, held constant within the period."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    out = dict(stocks)
    for mid, mover in movers.items():
        x = out.get(mid, 0.0)
        if x <= 0.0:
            continue
        rate = mover.max_accum_rate * math.tanh(surplus_args.get(mid, 0.0))
        for _ in range(substeps):
            x *= 1.0 + rate / substeps
        out[mid] = x
    return out


def normalized_surplus_args(phi_l: dict[str, float],
                            movers: dict[str, PrimeMoverType],
                            normalization: str | float) -> dict[str, float]:
    """Dimensionless accumulation drive per mover."""
    if normalization == "own_eps":
        return {mid: phi_l[mid] / movers[mid].direct_energy
                for mid in movers}
    ref = float(normalization)
    return {mid: phi_l[mid] / ref for mid in movers}


def apply_event(state: EconomyState, event: EventSpec) -> EconomyState:
    """Apply one shock to the state; multiplicative shifts compose."""
    if event.kind in ("efficiency_shift", "meec_shift"):
        if event.good not in state.energy_goods \
                and event.good not in state.non_energy_goods:
            raise ScenarioValidationError(
                "event.good", f"unknown or inactive good {event.good!r}")
        mult = dict(state.multipliers)
        mult[event.good] = mult.get(event.good, 1.0) * event.multiplier
        return replace(state, multipliers=mult)
    if event.kind == "endowment_shock":
        if event.mover not in state.movers:
            raise ScenarioValidationError(
                "event.mover", f"unknown or inactive mover {event.mover!r}")
        stocks = dict(state.stocks)
        new = stocks.get(event.mover, 0.0) + event.delta
        if new < 0.0:
            raise ScenarioValidationError(
                "event.delta",
                f"shock drives stock of {event.mover!r} below zero")
        stocks[event.mover] = new
        return replace(state, stocks=stocks)
    if event.kind == "new_prime_mover":
        if event.new_mover.id in state.movers:
            raise ScenarioValidationError(
                "event.mover.id",
                f"prime mover {event.new_mover.id!r} already active")
        movers = dict(state.movers)
        stocks = dict(state.stocks)
        movers[event.new_mover.id] = event.new_mover
        stocks[event.new_mover.id] = event.new_mover.endowment
        return replace(state, movers=movers, stocks=stocks)
    if event.kind == "new_energy_good":
        if event.new_good.id in state.energy_goods:
            raise ScenarioValidationError(
                "event.good.id",
                f"energy good {event.new_good.id!r} already active")
        goods = dict(state.energy_goods)
        cum = dict(state.cum_extraction)
        goods[event.new_good.id] = event.new_good
        cum[event.new_good.id] = 0.0
        return replace(state, energy_goods=goods, cum_extraction=cum)
    raise ScenarioValidationError("event.kind",
                                  f"unknown event kind {event.kind!r}")


def _is_steady(scenario: ScenarioConfig, state: EconomyState,
               energy: EnergySideSolution,
               surplus_args: dict[str, float]) -> bool:
    s = scenario.solver
    max_stock = max(state.stocks.values(), default=0.0)
    for mid, mover in state.movers.items():
        x = state.stocks.get(mid, 0.0)
        growth = mover.max_accum_rate * math.tanh(surplus_args[mid]) * x
        if growth >= s.ss_accum_tol * max(max_stock, 1e-300):
            return False
    for gid, good in state.energy_goods.items():
        if good.pes_stock is not None:
            if state.cum_extraction.get(gid, 0.0) >= good.pes_stock:
                continue    # exhausted source: the gap is inactionable
            if energy.outputs.get(gid, 0.0) > 0.0:
                return False    # bounded stock still being drawn down
        if energy.marginal_surplus[gid] >= s.ss_alpha_tol \
                * good.energy_content:
            return False
    return True


def _pending_changes(scenario: ScenarioConfig, t: int) -> bool:
    """True while introductions or events later than ``t`` are scheduled."""
    if any(ev.period > t for ev in scenario.events):
        return True
    intro = [m.intro_period for m in scenario.prime_movers]
    intro += [g.intro_period for g in scenario.energy_goods]
    intro += [g.intro_period for g in scenario.non_energy_goods]
    return any(p > t for p in intro)


def simulate(scenario: ScenarioConfig,
             horizon: int | None = None) -> Trajectory:
    """Run the period loop until the horizon or a detected steady state."""
    horizon = scenario.horizon if horizon is None else horizon
    state = initial_state(scenario)
    events = sorted(scenario.events, key=lambda e: (e.period, e.kind))
    records: list[PeriodRecord] = []
    steady: dict | None = None

    for t in range(horizon + 1):
        state = activate_due(scenario, state, t)
        for ev in events:
            if ev.period == t:
                state = apply_event(state, ev)

        try:
            energy = solve_energy_side(scenario, state)
            demand: DemandSolution | None = None
            if state.non_energy_goods:
                demand = demand_for_state(scenario, state,
                                          energy.usable_surplus,
                                          energy.employment)
        except EglError as exc:
            log.error("period %d solve failed: %s", t, exc)
            return Trajectory(records=tuple(records), steady_state=steady,
                              diagnostic={"period": t, "error": str(exc)})

        phi_l = mover_surplus_rates(energy.phi, state.movers)
        surplus_args = normalized_surplus_args(
            phi_l, state.movers, scenario.solver.accum_normalization)
        log.debug("t=%d phi=%.6g E*=%.6g P=%.6g", t, energy.phi,
                  energy.usable_surplus, aggregate_power(state))

        records.append(PeriodRecord(
            t=t, stocks=dict(state.stocks), phi=energy.phi,
            mover_surplus=phi_l, outputs=dict(energy.outputs),
            marginal_surplus=dict(energy.marginal_surplus),
            meroi=dict(energy.meroi),
            usable_surplus=energy.usable_surplus,
            gross_income=energy.gross_income,
            gross_expenditure=energy.gross_expenditure,
            bundle=dict(demand.bundle) if demand else {},
            lam=demand.lam if demand else None,
            power=aggregate_power(state),
            cum_extraction=dict(state.cum_extraction),
            usability_slack=demand.usability_slack if demand else 0.0,
            binding_constraints=dict(energy.binding_constraints)))

        if _is_steady(scenario, state, energy, surplus_args) \
                and not _pending_changes(scenario, t):
            steady = {
                "period": t,
                "phi": energy.phi,
                "max_alpha": max(energy.marginal_surplus.values(),
                                 default=0.0),
                "outputs": dict(energy.outputs),
                "stocks": dict(state.stocks),
            }
            break

        if t == horizon:
            break

        cum = dict(state.cum_extraction)
        for gid, q in energy.outputs.items():
            cum[gid] = cum.get(gid, 0.0) + q
        stocks = step_accumulation(state.stocks, surplus_args, state.movers,
                                   scenario.solver.substeps)
        state = replace(state, period=t + 1, stocks=stocks,
                        cum_extraction=cum)

    return Trajectory(records=tuple(records), steady_state=steady)
