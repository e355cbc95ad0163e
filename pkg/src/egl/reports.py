"""CSV emission for equilibria, demand solutions, trajectories, and sweeps.

Numbers are printed with up to 12 significant digits (Python ``.12g``), the
decimal separator is ``.``, fields are comma-separated, and lines end with
LF, so repeated runs on the same inputs are byte-identical.
"""

from __future__ import annotations

import math

from .core import EconomyState, ScenarioConfig
from .demand import DemandSolution
from .growth import Trajectory
from .statics import SignTable
from .surplus import EnergySideSolution


def fmt(value) -> str:
    """Canonical numeric formatting for every emitted number."""
    if value is None:
        return "nan"
    if isinstance(value, str):
        return value
    return format(float(value), ".12g")


def _lines(rows: list[list]) -> str:
    return "".join(",".join(fmt(v) for v in row) + "\n" for row in rows)


def equilibrium_csv(scenario: ScenarioConfig, state: EconomyState,
                    solution: EnergySideSolution) -> str:
    rows: list[list] = [["good", "Q_star", "gamma", "alpha", "E_good",
                         "meroi", "binding_constraint"]]
    for good in state.energy_goods.values():
        gid = good.id
        q = solution.outputs.get(gid, 0.0)
        e_good = good.energy_content * q - _good_expenditure(
            scenario, state, gid, q)
        rows.append([gid, q, solution.gamma[gid],
                     solution.marginal_surplus[gid], e_good,
                     solution.meroi[gid],
                     solution.binding_constraints.get(gid, "")])
    rows.append([])
    rows.append(["phi", solution.phi])
    rows.append(["E_total", solution.usable_surplus])
    rows.append(["I", solution.gross_income])
    rows.append(["G", solution.gross_expenditure])
    return _lines(rows)


def _good_expenditure(scenario, state, gid, q) -> float:
    from .core import effective_multiplier
    from .embodied import cumulative_transfer
    good = state.energy_goods[gid]
    return cumulative_transfer(good.technology, state.movers, q,
                               effective_multiplier(good, state))


def demand_csv(solution: DemandSolution) -> str:
    rows: list[list] = [["good", "Q_star", "gamma_avg", "gamma_marginal",
                         "energy_spent"]]
    for gid, q in solution.bundle.items():
        avg = solution.gamma_average.get(gid)
        rows.append([gid, q, avg, solution.gamma_marginal.get(gid),
                     (avg * q) if avg is not None else 0.0])
    rows.append([])
    rows.append(["lambda", solution.lam])
    rows.append(["E", solution.energy_budget])
    rows.append(["budget_residual", solution.budget_residual])
    rows.append(["usability_slack", solution.usability_slack])
    return _lines(rows)


def trajectory_csv(scenario: ScenarioConfig, trajectory: Trajectory) -> str:
    good_ids = [g.id for g in scenario.energy_goods]
    for ev in scenario.events:
        if ev.kind == "new_energy_good":
            good_ids.append(ev.new_good.id)
    mover_ids = [m.id for m in scenario.prime_movers]
    for ev in scenario.events:
        if ev.kind == "new_prime_mover":
            mover_ids.append(ev.new_mover.id)

    header = ["t", "phi", "E_star", "P", "lambda"]
    for gid in good_ids:
        header += [f"Q_{gid}", f"alpha_{gid}", f"meroi_{gid}"]
    for mid in mover_ids:
        header += [f"x_{mid}", f"phi_l_{mid}"]

    rows: list[list] = [header]
    for r in trajectory.records:
        row: list = [r.t, r.phi, r.usable_surplus, r.power, r.lam]
        for gid in good_ids:
            row += [r.outputs.get(gid, math.nan),
                    r.marginal_surplus.get(gid, math.nan),
                    r.meroi.get(gid)]
        for mid in mover_ids:
            row += [r.stocks.get(mid, math.nan),
                    r.mover_surplus.get(mid, math.nan)]
        rows.append(row)
    text = _lines(rows)

    if trajectory.steady_state is not None:
        ss = trajectory.steady_state
        text += f"# steady_state_period,{fmt(ss['period'])}\n"
        text += f"# steady_state_phi,{fmt(ss['phi'])}\n"
        text += f"# steady_state_max_alpha,{fmt(ss['max_alpha'])}\n"
        for gid in sorted(ss["outputs"]):
            text += f"# steady_state_Q_{gid},{fmt(ss['outputs'][gid])}\n"
    if trajectory.diagnostic is not None:
        d = trajectory.diagnostic
        text += f"# aborted_period,{d['period']}\n"
        text += f"# error,{d['error']}\n"
    return text


def sign_table_csv(tables: dict[str, SignTable]) -> str:
    rows: list[list] = [["proposition", "trials", "confirmed", "failed",
                         "min_derivative", "max_derivative"]]
    for key in sorted(tables):
        t = tables[key]
        if not t.applicable:
            rows.append([t.proposition, 0, 0, 0, "not_applicable",
                         "not_applicable"])
            continue
        rows.append([t.proposition, t.trials, t.confirmations,
                     len(t.failures), t.min_derivative, t.max_derivative])
    text = _lines(rows)
    text += f"# generator,{tables[next(iter(sorted(tables)))].generator}\n"
    return text


def failures_csv(tables: dict[str, SignTable]) -> str:
    rows: list[list] = [["proposition", "trial", "digest", "derivative"]]
    for key in sorted(tables):
        for trial, digest, deriv in tables[key].failures:
            rows.append([key, trial, digest, deriv])
    return _lines(rows)


def meec_curve_csv(points) -> str:
    rows: list[list] = [["Q", "gamma", "gamma_avg", "G", "eta"]]
    for p in points:
        rows.append([p.quantity, p.marginal, p.average, p.cumulative,
                     p.elasticity])
    return _lines(rows)
