"""Energy-side equilibrium: surplus maximization under mover scarcity.

For each energy good, optimal output equates the marginal energy surplus
(energy content minus marginal embodied energy) with a scarcity premium
proportional to phi / (1 - phi), where phi in [0, 1) is the share of
potential surplus that would be useless given the prime movers left over
for non-energy production.  phi itself is pinned down by complementary
slackness on usability: either phi = 0 and the leftover fleet can absorb
the whole surplus, or the surplus exactly matches the leftover fleet's
direct-energy capacity.

The residual E(phi) - U(phi) is monotone decreasing for eventually-upward
marginal embodied energy curves, so a guarded bisection finds the fixed
point; a detected monotonicity failure falls back to a dense scan.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .core import (CobbDouglas, EconomyState, EnergyGood, ScenarioConfig,
                   effective_multiplier, initial_state)
from .embodied import (cumulative_transfer, input_requirements,
                       marginal_embodied, marginal_requirements,
                       output_cap_for_stock, sample_curve)
from .errors import SolverError
from .numerics import bracketed_root

log = logging.getLogger("egl.surplus")

_PHI_MAX = 1.0 - 1e-12


@dataclass(frozen=True)
class EnergySideSolution:
    """Solved energy side of one period."""

    outputs: dict[str, float]                    # Q per good
    employment: dict[str, dict[str, float]]      # good -> mover -> units
    phi: float                                   # useless-surplus share
    marginal_surplus: dict[str, float]           # alpha per good at Q*
    mover_surplus: dict[str, float]              # phi_l per mover (joules)
    gamma: dict[str, float]                      # marginal embodied at Q*
    usable_surplus: float                        # E*
    gross_income: float                          # I = sum(delta Q)
    gross_expenditure: float                     # G = sum of transfers
    meroi: dict[str, float | None]               # delta / gamma, None at Q=0
    foc_good_residuals: dict[str, float]         # relative, interior goods
    foc_mover_residuals: dict[str, float]        # "good/mover", smooth techs
    binding_constraints: dict[str, str]          # good -> constraint tag
    usable_capacity: float                       # U at the solution
    slack_residual: float                        # E - U at the solution
    phi_forced: bool = False
    null: bool = False


@dataclass(frozen=True)
class Figure1Data:
    """Sampled curves and markers for one good's equilibrium chart."""

    good: str
    quantities: list[float]
    meec: list[float]
    energy_content: float
    saturation_quantity: float | None
    markers: dict[str, float] = field(default_factory=dict)


def marginal_surplus_at(good: EnergyGood, q: float,
                        state: EconomyState) -> float:
    """Vertical gap between energy content and the marginal curve at q."""
    if q < 0.0:
        raise ValueError("quantity must be >= 0")
    m = effective_multiplier(good, state)
    return good.energy_content - marginal_embodied(good.technology,
                                                   state.movers, q, m)


def scarcity_premium(good: EnergyGood, q: float, phi: float,
                     state: EconomyState) -> float:
    """Premium (phi/(1-phi)) * mean over used movers of eps_l * g'_l(q)."""
    if not 0.0 <= phi < 1.0:
        raise ValueError("phi must be in [0, 1)")
    if phi == 0.0:
        return 0.0
    m = effective_multiplier(good, state)
    grads = marginal_requirements(good.technology, state.movers, q, m)
    total = sum(state.movers[mid].direct_energy * g
                for mid, g in grads.items())
    return phi / (1.0 - phi) * total / len(grads)


def mover_surplus_rates(phi: float,
                        movers: dict[str, object]) -> dict[str, float]:
    """Per-mover marginal energy surplus phi_l = phi * eps_l / (1 - phi)."""
    if not 0.0 <= phi < 1.0:
        raise ValueError("phi must be in [0, 1)")
    factor = phi / (1.0 - phi)
    return {mid: factor * m.direct_energy for mid, m in movers.items()}


def meroi(good: EnergyGood, solution: EnergySideSolution) -> float | None:
    """Marginal energy return on investment at the solved output."""
    return solution.meroi.get(good.id)


# ---------------------------------------------------------------------------
# solver internals
# ---------------------------------------------------------------------------

class _Problem:
    """Precomputed per-good data for one energy-side solve."""

    def __init__(self, scenario: ScenarioConfig, state: EconomyState):
        self.state = state
        self.settings = scenario.solver
        self.goods = list(state.energy_goods.values())
        self.mult = {g.id: effective_multiplier(g, state) for g in self.goods}
        self.gamma0 = {
            g.id: marginal_embodied(g.technology, state.movers, 0.0,
                                    self.mult[g.id])
            for g in self.goods}
        self.producible = {}
        self.caps = {}
        self.cap_tags = {}
        self.exhausted = set()
        for g in self.goods:
            used = g.technology.used_movers()
            ok = all(state.stocks.get(m, 0.0) > 0.0 for m in used)
            self.producible[g.id] = ok
            if g.pes_stock is not None:
                remaining = max(
                    g.pes_stock - state.cum_extraction.get(g.id, 0.0), 0.0)
                if remaining <= 0.0:
                    self.exhausted.add(g.id)
            if not ok:
                continue
            cap, tag = math.inf, ""
            for mid in used:
                c = output_cap_for_stock(g.technology, state.movers, mid,
                                         state.stocks[mid], self.mult[g.id])
                if c < cap:
                    cap, tag = c, f"endowment:{mid}"
            if g.pes_stock is not None:
                remaining = max(
                    g.pes_stock - state.cum_extraction.get(g.id, 0.0), 0.0)
                if remaining < cap:
                    cap, tag = remaining, "pes"
            self.caps[g.id] = cap
            self.cap_tags[g.id] = tag
        self.candidates = [
            g for g in self.goods
            if self.producible[g.id]
            and g.energy_content > self.gamma0[g.id]
            and self.caps[g.id] > 0.0]

    def premium_factor(self, good: EnergyGood, q: float) -> float:
        """Mean of eps_l * g'_l(q) over the good's used movers."""
        grads = marginal_requirements(good.technology, self.state.movers, q,
                                      self.mult[good.id])
        total = sum(self.state.movers[mid].direct_energy * g
                    for mid, g in grads.items())
        return total / len(grads)

    def good_output(self, good: EnergyGood, c: float):
        """Optimal output of one good at premium weight c = phi/(1-phi).

        The marginal gain F(q) = content - gamma(q) - c * premium(q) is
        strictly decreasing for the smooth technology, so a sign change on
        [0, cap] pins the unique interior optimum.  For fixed proportions
        both terms follow the convex requirement profile h', making F
        concave: the optimum is the last downward crossing, and when the
        curve starts above the content (F(0) <= 0) the integrated gain
        decides between producing through the dip and shutting down.
        """
        cap = self.caps[good.id]
        tag = self.cap_tags[good.id]
        rtol = self.settings.q_rtol
        tech = good.technology
        delta = good.energy_content

        if isinstance(tech, CobbDouglas):
            def gain(q: float) -> float:
                return (delta
                        - marginal_embodied(tech, self.state.movers, q,
                                            self.mult[good.id])
                        - c * self.premium_factor(good, q))

            if gain(cap) >= 0.0:
                return cap, tag
            return bracketed_root(gain, 0.0, cap, rtol=rtol), None

        # fixed proportions: F(q) = delta - a * h'(q) with a > 0
        movers = self.state.movers
        used = [(mid, nu) for mid, nu in tech.requirements.items()
                if nu > 0.0]
        w_total = sum(movers[mid].total_transfer * nu for mid, nu in used)
        eps_mean = sum(movers[mid].direct_energy * nu
                       for mid, nu in used) / len(used)
        a = self.mult[good.id] * (w_total + c * eps_mean)

        def gain(q: float) -> float:
            return delta - a * tech.marginal_profile(q)

        def total_gain(q: float) -> float:
            return delta * q - a * tech.cumulative_profile(q)

        q_dip = self._profile_dip(tech)
        q_peak = min(q_dip, cap)
        if gain(q_peak) <= 0.0:
            return 0.0, None
        if gain(cap) >= 0.0:
            q_best, best_tag = cap, tag
        else:
            q_best = bracketed_root(gain, q_peak, cap, rtol=rtol)
            best_tag = None
        if gain(0.0) <= 0.0 and total_gain(q_best) <= 0.0:
            return 0.0, None
        return q_best, best_tag

    @staticmethod
    def _profile_dip(tech) -> float:
        """Location of the requirement profile's minimum (h'' = 0)."""
        if tech.c1 <= 0.0:
            return 0.0                      # h' non-decreasing
        if tech.c2 <= 0.0:
            return math.inf                 # h' non-increasing

        def curvature(q: float) -> float:
            return (-(tech.c1 / tech.tau) * math.exp(-q / tech.tau)
                    + (tech.c2 * tech.rho / tech.q_s)
                    * (q / tech.q_s) ** (tech.rho - 1.0))

        if curvature(0.0) >= 0.0:
            return 0.0
        hi = max(tech.tau, tech.q_s)
        while curvature(hi) < 0.0:
            hi *= 2.0
        return bracketed_root(curvature, 0.0, hi, rtol=1e-12)

    def outputs_at(self, phi: float):
        """Per-good outputs at a candidate phi: optimal-output rule per
        good, then per-mover rationing when a shared endowment is
        over-committed."""
        c = phi / (1.0 - phi)
        outputs: dict[str, float] = {g.id: 0.0 for g in self.goods}
        bindings: dict[str, str] = {}
        for g in self.candidates:
            q, tag = self.good_output(g, c)
            outputs[g.id] = q
            if tag is not None:
                bindings[g.id] = tag

        employment = self._employment(outputs)
        outputs, employment, extra = self._ration(outputs, employment)
        bindings.update(extra)
        return outputs, employment, bindings

    def rescale_to_usability(self, outputs: dict[str, float]):
        """Shrink outputs along a common ray until surplus fits capacity.

        Used when the usability residual jumps across zero without a root:
        the premium mechanism cannot price a locally downward-sloping
        requirement curve, so the constraint is imposed directly.
        """
        def excess(scale: float) -> float:
            scaled = {gid: q * scale for gid, q in outputs.items()}
            emp = self._employment(scaled)
            income, spent = self.surplus(scaled)
            return (income - spent) - self.capacity(emp)

        if excess(1.0) <= 0.0:
            return outputs, self._employment(outputs), False
        scale = bracketed_root(excess, 0.0, 1.0, rtol=1e-13)
        scaled = {gid: q * scale for gid, q in outputs.items()}
        return scaled, self._employment(scaled), True

    def _employment(self, outputs: dict[str, float]):
        emp: dict[str, dict[str, float]] = {}
        for g in self.goods:
            q = outputs.get(g.id, 0.0)
            if q <= 0.0:
                emp[g.id] = {}
                continue
            emp[g.id] = input_requirements(g.technology, self.state.movers, q,
                                           self.mult[g.id])
        return emp

    def _ration(self, outputs, employment):
        """Scale back goods sharing an over-committed mover type.

        Proportional rationing: all goods employing the worst-violated mover
        shrink by a common factor until its total employment meets the stock.
        Loops at most once per mover type.
        """
        bindings: dict[str, str] = {}
        for _ in range(len(self.state.movers) + 1):
            totals: dict[str, float] = {}
            for emp in employment.values():
                for mid, x in emp.items():
                    totals[mid] = totals.get(mid, 0.0) + x
            worst, worst_ratio = None, 1.0 + 1e-12
            for mid, used in sorted(totals.items()):
                stock = self.state.stocks.get(mid, 0.0)
                if stock <= 0.0 and used > 0.0:
                    ratio = math.inf
                else:
                    ratio = used / stock if stock > 0.0 else 1.0
                if ratio > worst_ratio:
                    worst, worst_ratio = mid, ratio
            if worst is None:
                return outputs, employment, bindings
            stock = self.state.stocks.get(worst, 0.0)
            users = [g for g in self.goods
                     if employment[g.id].get(worst, 0.0) > 0.0]

            def over(scale: float) -> float:
                tot = 0.0
                for g in users:
                    q = outputs[g.id] * scale
                    reqs = input_requirements(g.technology, self.state.movers,
                                              q, self.mult[g.id])
                    tot += reqs.get(worst, 0.0)
                return tot - stock

            s = bracketed_root(over, 0.0, 1.0, rtol=1e-13) \
                if over(0.0) < 0.0 else 0.0
            for g in users:
                outputs[g.id] = outputs[g.id] * s
                bindings[g.id] = f"endowment:{worst}"
            employment = self._employment(outputs)
        return outputs, employment, bindings

    def surplus(self, outputs: dict[str, float]):
        income = 0.0
        spent = 0.0
        for g in self.goods:
            q = outputs.get(g.id, 0.0)
            income += g.energy_content * q
            spent += cumulative_transfer(g.technology, self.state.movers, q,
                                         self.mult[g.id])
        return income, spent

    def capacity(self, employment) -> float:
        """Direct-energy capacity of movers left over for non-energy work."""
        used: dict[str, float] = {}
        for emp in employment.values():
            for mid, x in emp.items():
                used[mid] = used.get(mid, 0.0) + x
        total = 0.0
        for mid, mover in self.state.movers.items():
            leftover = self.state.stocks.get(mid, 0.0) - used.get(mid, 0.0)
            if leftover > 0.0:
                total += mover.direct_energy * leftover
        return total

    def residual(self, phi: float) -> float:
        outputs, employment, _ = self.outputs_at(phi)
        income, spent = self.surplus(outputs)
        return (income - spent) - self.capacity(employment)


def _null_solution(problem: _Problem, phi: float = 0.0,
                   forced: bool = False) -> EnergySideSolution:
    state = problem.state
    outputs = {g.id: 0.0 for g in problem.goods}
    alpha = {g.id: g.energy_content - problem.gamma0[g.id]
             for g in problem.goods}
    return EnergySideSolution(
        outputs=outputs,
        employment={g.id: {} for g in problem.goods},
        phi=phi,
        marginal_surplus=alpha,
        mover_surplus=mover_surplus_rates(phi, state.movers),
        gamma={g.id: problem.gamma0[g.id] for g in problem.goods},
        usable_surplus=0.0, gross_income=0.0, gross_expenditure=0.0,
        meroi={g.id: None for g in problem.goods},
        foc_good_residuals={}, foc_mover_residuals={},
        binding_constraints={},
        usable_capacity=problem.capacity({}),
        slack_residual=0.0, phi_forced=forced, null=True)


def _solve_phi(problem: _Problem) -> tuple[float, bool]:
    """Useless-surplus share by bisection on the usability residual.

    Returns (phi, converged).  ``converged`` is False when the residual
    jumps across zero without a root, which happens when a requirement
    curve slopes downward at the relevant margin; the caller then imposes
    the usability constraint directly.
    """
    settings = problem.settings
    rho0 = problem.residual(0.0)
    if rho0 <= 0.0:
        return 0.0, True
    scale = max(1.0, abs(rho0))
    ftol = settings.slack_tol * scale

    hi = 0.5
    while problem.residual(hi) > 0.0:
        hi = 1.0 - (1.0 - hi) / 4.0
        if hi >= _PHI_MAX:
            raise SolverError(
                "degenerate",
                "usability residual stays positive as phi approaches 1")

    seen: list[tuple[float, float]] = [(0.0, rho0)]

    def rho(phi: float) -> float:
        value = problem.residual(phi)
        seen.append((phi, value))
        return value

    lo = 0.0
    best, best_val = hi, rho(hi)
    for _ in range(240):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        val = rho(mid)
        if abs(val) <= abs(best_val):
            best, best_val = mid, val
        if (hi - lo) <= settings.phi_tol and abs(best_val) <= ftol:
            break
        if val >= 0.0:
            lo = mid
        else:
            hi = mid

    # the residual should fall as phi rises; a violation beyond noise means
    # the bisection assumptions broke, so rescan densely before giving up
    seen.sort()
    tol = 1e-7 * scale
    monotone = all(seen[i + 1][1] <= seen[i][1] + tol
                   for i in range(len(seen) - 1))
    if not monotone:
        log.warning("usability residual non-monotone; falling back to scan")
        prev_phi = 0.0
        for i in range(1, 4097):
            phi = i / 4096.0
            val = problem.residual(phi)
            if val <= 0.0:
                return _bisect_cell(problem, prev_phi, phi,
                                    settings.phi_tol, ftol)
            prev_phi = phi
        raise SolverError("degenerate",
                          "usability residual never crosses zero")
    if abs(best_val) > ftol:
        log.info("usability residual jumps at phi=%.6g; "
                 "imposing the constraint directly", lo)
        return lo, False
    return best, True


def _bisect_cell(problem: _Problem, lo: float, hi: float, xtol: float,
                 ftol: float) -> tuple[float, bool]:
    x, fx = hi, problem.residual(hi)
    last_lo = lo
    while (hi - lo) > xtol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        val = problem.residual(mid)
        if abs(val) < abs(fx):
            x, fx = mid, val
        if val >= 0.0:
            lo = mid
            last_lo = mid
        else:
            hi = mid
    if abs(fx) > ftol:
        return last_lo, False
    return x, True


def solve_energy_side(scenario: ScenarioConfig,
                      state: EconomyState | None = None,
                      force_phi: float | None = None) -> EnergySideSolution:
    """Solve the energy side at the given state (period-0 state by default).

    ``force_phi`` pins the useless-surplus share instead of solving the
    usability fixed point (diagnostic mode; also honored from the scenario's
    solver settings).
    """
    if state is None:
        state = initial_state(scenario)
    problem = _Problem(scenario, state)

    if force_phi is None:
        force_phi = scenario.solver.force_phi
    forced = force_phi is not None

    profitable = [g for g in problem.goods
                  if g.energy_content > problem.gamma0[g.id]]
    if not profitable:
        return _null_solution(problem, force_phi or 0.0, forced)
    if not problem.candidates:
        if all(g.id in problem.exhausted for g in profitable):
            # primary sources ran dry; nothing left to extract
            return _null_solution(problem, force_phi or 0.0, forced)
        raise SolverError(
            "infeasible",
            "no producible energy good: endowments cannot produce output")

    if forced:
        if not 0.0 <= force_phi < 1.0:
            raise ValueError("forced phi must be in [0, 1)")
        phi, balanced = float(force_phi), True
    else:
        phi, balanced = _solve_phi(problem)

    outputs, employment, bindings = problem.outputs_at(phi)
    if not balanced:
        outputs, employment, rescaled = problem.rescale_to_usability(outputs)
        if rescaled:
            for gid, q in outputs.items():
                if q > 0.0:
                    bindings[gid] = "usability"
    income, spent = problem.surplus(outputs)
    e_star = income - spent
    capacity = problem.capacity(employment)

    alpha: dict[str, float] = {}
    gamma: dict[str, float] = {}
    meroi_map: dict[str, float | None] = {}
    foc_goods: dict[str, float] = {}
    foc_movers: dict[str, float] = {}
    phi_l = mover_surplus_rates(phi, state.movers)

    for g in problem.goods:
        q = outputs.get(g.id, 0.0)
        m = problem.mult[g.id]
        gam = marginal_embodied(g.technology, state.movers, q, m)
        gamma[g.id] = gam
        alpha[g.id] = g.energy_content - gam
        meroi_map[g.id] = g.energy_content / gam if q > 0.0 else None
        if q <= 0.0:
            continue
        premium = scarcity_premium(g, q, phi, state)
        foc_goods[g.id] = abs(alpha[g.id] - premium) / g.energy_content
        if isinstance(g.technology, CobbDouglas) and g.id not in bindings:
            grads = marginal_requirements(g.technology, state.movers, q, m)
            for mid, gprime in grads.items():
                mover = state.movers[mid]
                resid = (g.energy_content / gprime
                         - mover.total_transfer - phi_l[mid])
                foc_movers[f"{g.id}/{mid}"] = abs(resid) / g.energy_content

    return EnergySideSolution(
        outputs=outputs, employment=employment, phi=phi,
        marginal_surplus=alpha, mover_surplus=phi_l, gamma=gamma,
        usable_surplus=e_star, gross_income=income, gross_expenditure=spent,
        meroi=meroi_map, foc_good_residuals=foc_goods,
        foc_mover_residuals=foc_movers, binding_constraints=bindings,
        usable_capacity=capacity, slack_residual=e_star - capacity,
        phi_forced=forced, null=False)


def figure1_report(scenario: ScenarioConfig, state: EconomyState | None,
                   good_id: str, solution: EnergySideSolution,
                   samples: int = 400) -> Figure1Data:
    """Curve samples and markers for one good's equilibrium rendering."""
    if state is None:
        state = initial_state(scenario)
    good = state.energy_goods[good_id]
    m = effective_multiplier(good, state)
    q_star = solution.outputs.get(good_id, 0.0)

    saturation = _saturation_quantity(good, state, m)
    spans = [1.0]
    if q_star > 0.0:
        spans.append(2.0 * q_star)
    if saturation is not None:
        spans.append(1.25 * saturation)
    q_max = max(spans)

    points = sample_curve(good.technology, state.movers, q_max,
                          samples=samples, multiplier=m)
    markers: dict[str, float] = {}
    if not solution.null and q_star > 0.0:
        markers = {
            "Q_star": q_star,
            "gamma": solution.gamma[good_id],
            "G": cumulative_transfer(good.technology, state.movers, q_star, m),
            "E_good": good.energy_content * q_star
            - cumulative_transfer(good.technology, state.movers, q_star, m),
            "alpha": solution.marginal_surplus[good_id],
        }
    return Figure1Data(good=good_id,
                       quantities=[p.quantity for p in points],
                       meec=[p.marginal for p in points],
                       energy_content=good.energy_content,
                       saturation_quantity=saturation,
                       markers=markers)


def _saturation_quantity(good: EnergyGood, state: EconomyState,
                         multiplier: float) -> float | None:
    """Output level whose direct-energy requirement uses the whole fleet.

    The demand ceiling drops vertically here: past this quantity the good's
    energy cannot be transferred by the movers its technology employs.
    """
    used = good.technology.used_movers()
    budget = sum(state.movers[mid].direct_energy
                 * state.stocks.get(mid, 0.0)
                 for mid in used if mid in state.movers)
    if budget <= 0.0:
        return 0.0

    def spent(q: float) -> float:
        reqs = input_requirements(good.technology, state.movers, q,
                                  multiplier)
        return sum(state.movers[mid].direct_energy * x
                   for mid, x in reqs.items())

    hi = 1.0
    while spent(hi) < budget:
        hi *= 2.0
        if hi > 1e12:
            return None
    return bracketed_root(lambda q: spent(q) - budget, 0.0, hi, rtol=1e-12)
