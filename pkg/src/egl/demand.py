"""Consumer problem: utility maximization under the energy budget.

Given the usable surplus E from the energy side, the agent picks the bundle
of non-energy goods whose cumulative embodied-energy cost exhausts E, with
each good's marginal utility proportional to its marginal embodied energy.

The solve is nested and scalar throughout: an inner monotone root gives each
good's quantity at a trial multiplier, an outer bracketed root drives the
budget residual to zero.  Internally the multiplier belongs to an additively
separable transform of the utility (same level sets, hence same demands);
the reported marginal utility of energy is evaluated on the stated utility
form at the solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (EconomyState, NonEnergyGood, Preferences, PrimeMoverType,
                   effective_multiplier)
from .embodied import (cumulative_transfer, input_requirements,
                       marginal_embodied)
from .numerics import bracketed_root


@dataclass(frozen=True)
class DemandSolution:
    """Solved consumer side: bundle, shadow value of energy, support fleet."""

    bundle: dict[str, float]                       # Q per non-energy good
    lam: float | None                              # utils per joule
    support_employment: dict[str, dict[str, float]]  # good -> mover -> units
    usability_slack: float                         # joules, < 0 flags Eq-7 gap
    budget_residual: float                         # joules
    feasible: bool
    violations: tuple[str, ...] = ()
    energy_budget: float = 0.0
    gamma_marginal: dict[str, float] = field(default_factory=dict)
    gamma_average: dict[str, float] = field(default_factory=dict)


def _curvature(preferences: Preferences) -> float:
    """Exponent r of the separable transform: 0 for Cobb-Douglas, 1-1/sigma for CES."""
    if preferences.form == "ces":
        return 1.0 - 1.0 / preferences.elasticity
    return 0.0


def marginal_utility(preferences: Preferences, bundle: dict[str, float],
                     good_id: str) -> float:
    """Marginal utility of one good at the bundle, on the stated form."""
    a = preferences.weights[good_id]
    q = bundle[good_id]
    if preferences.form == "cobb_douglas":
        u = 1.0
        for gid, qty in bundle.items():
            u *= qty ** preferences.weights[gid]
        return a * u / q
    r = _curvature(preferences)
    v = sum(preferences.weights[gid] * qty ** r
            for gid, qty in bundle.items())
    return v ** (1.0 / r - 1.0) * a * q ** (r - 1.0)


def solve_demands(preferences: Preferences,
                  goods: list[NonEnergyGood],
                  movers: dict[str, PrimeMoverType],
                  energy: float,
                  multipliers: dict[str, float] | None = None,
                  remaining_endowment: dict[str, float] | None = None,
                  rtol: float = 1e-10) -> DemandSolution:
    """Optimal non-energy bundle for a usable surplus of ``energy`` joules.

    When ``remaining_endowment`` is given the support prime movers are
    allocated as well and per-type feasibility plus the usability gap are
    reported on the solution.
    """
    if not goods:
        raise ValueError("need at least one non-energy good")
    mult = {g.id: (multipliers or {}).get(g.id, 1.0) for g in goods}

    if energy <= 0.0:
        bundle = {g.id: 0.0 for g in goods}
        return _with_allocation(
            DemandSolution(bundle=bundle, lam=None, support_employment={},
                           usability_slack=0.0, budget_residual=0.0,
                           feasible=True, energy_budget=max(energy, 0.0)),
            goods, movers, mult, remaining_endowment)

    r = _curvature(preferences)
    weights = {g.id: preferences.weights[g.id] for g in goods}

    def quantity(good: NonEnergyGood, target: float) -> float:
        """Inner solve: q ** (1-r) * gamma(q) = target."""

        def gap(q: float) -> float:
            return (q ** (1.0 - r)
                    * marginal_embodied(good.technology, movers, q,
                                        mult[good.id])
                    - target)

        hi = 1.0
        while gap(hi) < 0.0:
            hi *= 2.0
            if hi > 1e180:
                raise ValueError("demand solve diverged")
        if gap(hi) == 0.0:
            return hi
        return bracketed_root(gap, 0.0, hi, rtol=rtol)

    def spending(lam_sep: float) -> float:
        total = 0.0
        for g in goods:
            q = quantity(g, weights[g.id] / lam_sep)
            total += cumulative_transfer(g.technology, movers, q,
                                         mult[g.id])
        return total

    lam_lo = lam_hi = 1.0
    while spending(lam_hi) > energy:
        lam_hi *= 4.0
        if lam_hi > 1e180:
            raise ValueError("demand solve diverged")
    while spending(lam_lo) < energy:
        lam_lo /= 4.0
        if lam_lo < 1e-180:
            raise ValueError("demand solve diverged")
    if lam_lo == lam_hi:
        lam_sep = lam_lo          # spending(1.0) hit the budget exactly
    else:
        lam_sep = bracketed_root(lambda lam: spending(lam) - energy,
                                 lam_lo, lam_hi, rtol=rtol)

    bundle = {g.id: quantity(g, weights[g.id] / lam_sep) for g in goods}
    gamma = {g.id: marginal_embodied(g.technology, movers, bundle[g.id],
                                     mult[g.id]) for g in goods}
    gamma_avg = {g.id: cumulative_transfer(g.technology, movers,
                                           bundle[g.id], mult[g.id])
                 / bundle[g.id] if bundle[g.id] > 0.0 else gamma[g.id]
                 for g in goods}
    spent = sum(gamma_avg[g.id] * bundle[g.id] for g in goods)
    lam = sum(marginal_utility(preferences, bundle, g.id) / gamma[g.id]
              for g in goods) / len(goods)

    return _with_allocation(
        DemandSolution(bundle=bundle, lam=lam, support_employment={},
                       usability_slack=0.0, budget_residual=spent - energy,
                       feasible=True, energy_budget=energy,
                       gamma_marginal=gamma, gamma_average=gamma_avg),
        goods, movers, mult, remaining_endowment)


def _with_allocation(solution: DemandSolution, goods, movers, mult,
                     remaining_endowment) -> DemandSolution:
    employment, feasible, violations = allocate_support_prime_movers(
        solution.bundle, goods, movers,
        remaining_endowment, multipliers=mult)
    slack = usability_slack(employment, movers, solution.energy_budget)
    return DemandSolution(
        bundle=solution.bundle, lam=solution.lam,
        support_employment=employment, usability_slack=slack,
        budget_residual=solution.budget_residual,
        feasible=feasible, violations=tuple(violations),
        energy_budget=solution.energy_budget,
        gamma_marginal=solution.gamma_marginal,
        gamma_average=solution.gamma_average)


def allocate_support_prime_movers(
        bundle: dict[str, float], goods: list[NonEnergyGood],
        movers: dict[str, PrimeMoverType],
        remaining_endowment: dict[str, float] | None,
        multipliers: dict[str, float] | None = None):
    """Prime movers required to produce the bundle, checked per type.

    Requirements come straight from each good's technology (cost-minimizing
    mix for the smooth kind).  An over-committed mover type is reported,
    never silently scaled away.
    """
    mult = multipliers or {}
    employment: dict[str, dict[str, float]] = {}
    totals: dict[str, float] = {}
    for g in goods:
        q = bundle.get(g.id, 0.0)
        if q <= 0.0:
            employment[g.id] = {}
            continue
        reqs = input_requirements(g.technology, movers, q,
                                  mult.get(g.id, 1.0))
        employment[g.id] = reqs
        for mid, x in reqs.items():
            totals[mid] = totals.get(mid, 0.0) + x
    feasible = True
    violations: list[str] = []
    if remaining_endowment is not None:
        for mid, used in sorted(totals.items()):
            avail = remaining_endowment.get(mid, 0.0)
            if used > avail * (1.0 + 1e-9) + 1e-15:
                feasible = False
                violations.append(mid)
    return employment, feasible, violations


def usability_slack(employment: dict[str, dict[str, float]],
                    movers: dict[str, PrimeMoverType],
                    energy: float) -> float:
    """Direct energy of the support fleet minus the surplus it must carry.

    Negative values flag a usability violation: the movers producing the
    bundle cannot physically transfer the whole surplus within the period.
    """
    direct = 0.0
    for reqs in employment.values():
        for mid, x in reqs.items():
            direct += movers[mid].direct_energy * x
    return direct - energy


def tangency_residual(preferences: Preferences, bundle: dict[str, float],
                      gamma: dict[str, float]) -> float:
    """Worst relative gap of MU_n / MU_m against gamma_n / gamma_m."""
    ids = [gid for gid, q in bundle.items() if q > 0.0]
    worst = 0.0
    for i, n in enumerate(ids):
        for m in ids[i + 1:]:
            lhs = (marginal_utility(preferences, bundle, n)
                   / marginal_utility(preferences, bundle, m))
            rhs = gamma[n] / gamma[m]
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def demand_for_state(scenario, state: EconomyState, energy: float,
                     energy_employment: dict[str, dict[str, float]]
                     ) -> DemandSolution:
    """Demand solve wired to a dynamic state: multipliers and leftovers."""
    goods = list(state.non_energy_goods.values())
    mult = {g.id: effective_multiplier(g, state) for g in goods}
    used: dict[str, float] = {}
    for reqs in energy_employment.values():
        for mid, x in reqs.items():
            used[mid] = used.get(mid, 0.0) + x
    remaining = {mid: max(state.stocks.get(mid, 0.0) - used.get(mid, 0.0),
                          0.0)
                 for mid in state.movers}
    return solve_demands(scenario.preferences, goods, state.movers, energy,
                         multipliers=mult, remaining_endowment=remaining,
                         rtol=scenario.solver.q_rtol)
