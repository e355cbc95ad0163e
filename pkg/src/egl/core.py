"""Domain types, derived per-unit energy quantities, and scenario loading.

The model describes a self-sufficient agent whose production is carried out
by *prime movers* (workers, engines, ...) transferring energy into *goods*.
Energy goods carry usable energy content per unit; non-energy goods yield
utility.  Everything downstream (surplus maximization, consumer demands,
accumulation dynamics) operates on the immutable value objects defined here.

All types are frozen dataclasses and safe to share across threads once
constructed; construction and validation are single-threaded per scenario.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

from .errors import ScenarioParseError, ScenarioValidationError

EVENT_KINDS = ("efficiency_shift", "meec_shift", "new_prime_mover",
               "new_energy_good", "endowment_shock")


# ---------------------------------------------------------------------------
# value objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimeMoverType:
    """A class of energy-transferring device or worker.

    ``direct_energy`` is the energy one unit transfers per period at its
    constant power rate; ``total_transfer`` adds the embodied energy amortized
    through depreciation.  Both are derived at construction and never drift
    from the source fields.
    """

    id: str
    power_rate: float            # watts
    period_length: float         # seconds, scenario-global
    depreciation: float          # in (0, 1)
    avg_embodied: float          # joules per unit
    endowment: float             # units available at the start
    max_accum_rate: float        # per period
    intro_period: int = 0
    direct_energy: float = field(init=False)    # joules / unit / period
    total_transfer: float = field(init=False)   # joules / unit / period

    def __post_init__(self):
        object.__setattr__(self, "direct_energy",
                           direct_energy(self.power_rate, self.period_length))
        object.__setattr__(self, "total_transfer",
                           self.direct_energy
                           + self.depreciation * self.avg_embodied)


@dataclass(frozen=True)
class CobbDouglas:
    """Smooth technology Q = scale * prod(x_l ** beta_l), sum(beta) in (0,1)."""

    scale: float
    exponents: dict[str, float]

    kind = "cobb_douglas"

    @property
    def returns_to_scale(self) -> float:
        return sum(self.exponents.values())

    def used_movers(self) -> list[str]:
        return [m for m, b in self.exponents.items() if b > 0.0]


@dataclass(frozen=True)
class FixedProportions:
    """Fixed-proportions technology with a curved marginal requirement.

    Producing the Q-th unit takes ``nu_l * h'(Q)`` units of each mover, with

        h'(Q) = c0 + c1 * exp(-Q / tau) + c2 * (Q / q_s) ** rho

    The decay term allows an initially falling requirement (scale economies);
    the power term forces the curve eventually upward (inconvenient sources).
    """

    requirements: dict[str, float]
    c0: float
    c1: float = 0.0
    tau: float = 1.0
    c2: float = 0.0
    q_s: float = 1.0
    rho: float = 1.0

    kind = "fixed_proportions"

    def used_movers(self) -> list[str]:
        return [m for m, nu in self.requirements.items() if nu > 0.0]

    def marginal_profile(self, q: float) -> float:
        """h'(q), strictly positive for q >= 0."""
        out = self.c0
        if self.c1 > 0.0:
            out += self.c1 * math.exp(-q / self.tau)
        if self.c2 > 0.0:
            out += self.c2 * (q / self.q_s) ** self.rho
        return out

    def cumulative_profile(self, q: float) -> float:
        """h(q) = integral of h' from 0 to q, in closed form."""
        out = self.c0 * q
        if self.c1 > 0.0:
            out += self.c1 * self.tau * (1.0 - math.exp(-q / self.tau))
        if self.c2 > 0.0:
            out += self.c2 * self.q_s / (self.rho + 1.0) \
                * (q / self.q_s) ** (self.rho + 1.0)
        return out


Technology = CobbDouglas | FixedProportions


@dataclass(frozen=True)
class EnergyGood:
    """A good consumed for its energy content (joules per unit)."""

    id: str
    energy_content: float
    technology: Technology
    pes_stock: float | None = None       # None means unbounded (renewable)
    depletion_exponent: float = 0.0
    requirement_multiplier: float = 1.0
    intro_period: int = 0


@dataclass(frozen=True)
class NonEnergyGood:
    """A utility-yielding good; its energy role is purely as a cost."""

    id: str
    technology: Technology
    utility_weight: float
    requirement_multiplier: float = 1.0
    intro_period: int = 0


@dataclass(frozen=True)
class Preferences:
    """Cobb-Douglas or CES utility over non-energy goods."""

    form: str                       # "cobb_douglas" | "ces"
    weights: dict[str, float]
    elasticity: float | None = None  # sigma for CES, > 0 and != 1


@dataclass(frozen=True)
class EventSpec:
    """A scheduled shock; exactly the payload fields for its kind are set."""

    period: int
    kind: str
    good: str | None = None
    mover: str | None = None
    multiplier: float | None = None
    delta: float | None = None
    new_mover: PrimeMoverType | None = None
    new_good: EnergyGood | None = None


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and knobs shared by the solvers."""

    phi_tol: float = 1e-10        # bisection width for the useless-surplus share
    q_rtol: float = 1e-10         # relative bracket width for output roots
    foc_tol: float = 1e-6         # accepted relative first-order residual
    quad_tol: float = 1e-9        # absolute quadrature tolerance (scaled)
    slack_tol: float = 1e-8       # complementary slackness, relative to surplus
    ss_accum_tol: float = 1e-8    # steady state: accumulation, relative to stock
    ss_alpha_tol: float = 1e-6    # steady state: marginal surplus, relative to delta
    seed: int = 0
    substeps: int = 1
    accum_normalization: str | float = "own_eps"
    force_phi: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: types, preferences, events, solver settings."""

    period_length: float
    prime_movers: tuple[PrimeMoverType, ...]
    energy_goods: tuple[EnergyGood, ...]
    non_energy_goods: tuple[NonEnergyGood, ...]
    preferences: Preferences
    events: tuple[EventSpec, ...] = ()
    solver: SolverSettings = SolverSettings()
    horizon: int = 500


@dataclass(frozen=True)
class EconomyState:
    """Dynamic view of the economy at one period.

    Holds the active type sets (per introduction period and events), current
    prime-mover stocks, cumulative extraction per energy good, and the
    event-composed requirement multipliers keyed by good id.
    """

    period: int
    movers: dict[str, PrimeMoverType]
    energy_goods: dict[str, EnergyGood]
    non_energy_goods: dict[str, NonEnergyGood]
    stocks: dict[str, float]
    cum_extraction: dict[str, float]
    multipliers: dict[str, float]


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------

def direct_energy(power_rate: float, period_length: float) -> float:
    """Energy transferred over one period at a constant power rate."""
    if power_rate <= 0.0 or period_length <= 0.0:
        raise ValueError("power rate and period length must be positive")
    return power_rate * period_length


def total_transfer_per_unit(mover: PrimeMoverType) -> float:
    """Direct energy plus depreciation-amortized embodied energy per unit."""
    return mover.direct_energy + mover.depreciation * mover.avg_embodied


def aggregate_power(state: EconomyState,
                    movers: dict[str, PrimeMoverType] | None = None) -> float:
    """Total power of the active fleet, sum of power_rate * stock."""
    movers = state.movers if movers is None else movers
    return sum(m.power_rate * state.stocks.get(m.id, 0.0)
               for m in movers.values())


def depletion_multiplier(good: EnergyGood, cum_extraction: float) -> float:
    """Requirement multiplier from depleting a bounded primary source."""
    if good.pes_stock is None or good.depletion_exponent == 0.0:
        return 1.0
    return (1.0 + cum_extraction / good.pes_stock) ** good.depletion_exponent


def effective_multiplier(good: EnergyGood | NonEnergyGood,
                         state: EconomyState | None = None) -> float:
    """Composed requirement multiplier: static * events * depletion."""
    m = good.requirement_multiplier
    if state is not None:
        m *= state.multipliers.get(good.id, 1.0)
        if isinstance(good, EnergyGood):
            m *= depletion_multiplier(
                good, state.cum_extraction.get(good.id, 0.0))
    return m


def initial_state(scenario: ScenarioConfig) -> EconomyState:
    """Economy at period 0: intro_period-0 types active, endowment stocks."""
    movers = {m.id: m for m in scenario.prime_movers if m.intro_period == 0}
    e_goods = {g.id: g for g in scenario.energy_goods if g.intro_period == 0}
    n_goods = {g.id: g for g in scenario.non_energy_goods
               if g.intro_period == 0}
    return EconomyState(
        period=0,
        movers=movers,
        energy_goods=e_goods,
        non_energy_goods=n_goods,
        stocks={m.id: m.endowment for m in movers.values()},
        cum_extraction={g.id: 0.0 for g in e_goods.values()},
        multipliers={},
    )


def activate_due(scenario: ScenarioConfig, state: EconomyState,
                 t: int) -> EconomyState:
    """Activate scenario types whose introduction period is ``t``."""
    movers = dict(state.movers)
    stocks = dict(state.stocks)
    e_goods = dict(state.energy_goods)
    n_goods = dict(state.non_energy_goods)
    cum = dict(state.cum_extraction)
    changed = False
    for m in scenario.prime_movers:
        if m.intro_period == t and m.id not in movers:
            movers[m.id] = m
            stocks[m.id] = m.endowment
            changed = True
    for g in scenario.energy_goods:
        if g.intro_period == t and g.id not in e_goods:
            e_goods[g.id] = g
            cum[g.id] = 0.0
            changed = True
    for g in scenario.non_energy_goods:
        if g.intro_period == t and g.id not in n_goods:
            n_goods[g.id] = g
            changed = True
    if not changed and state.period == t:
        return state
    return replace(state, period=t, movers=movers, energy_goods=e_goods,
                   non_energy_goods=n_goods, stocks=stocks, cum_extraction=cum)


# ---------------------------------------------------------------------------
# scenario document parsing / validation
# ---------------------------------------------------------------------------

def _fail(field_path: str, message: str):
    raise ScenarioValidationError(field_path, message)


def _num(doc: dict, key: str, path: str, *, default=None,
         required: bool = True) -> float:
    if key not in doc:
        if required:
            _fail(f"{path}.{key}", "missing required field")
        return default
    v = doc[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) \
            or not math.isfinite(float(v)):
        _fail(f"{path}.{key}", "must be a finite number")
    return float(v)


def _intval(doc: dict, key: str, path: str, default: int = 0) -> int:
    v = doc.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        _fail(f"{path}.{key}", "must be an integer")
    return v


def _check_keys(doc: dict, allowed: set[str], path: str):
    extra = set(doc) - allowed
    if extra:
        _fail(f"{path}.{sorted(extra)[0]}", "unknown field")


def _parse_technology(doc, path: str) -> Technology:
    if not isinstance(doc, dict):
        _fail(path, "technology must be an object")
    kind = doc.get("kind")
    if kind == "cobb_douglas":
        _check_keys(doc, {"kind", "scale", "exponents"}, path)
        scale = _num(doc, "scale", path)
        if scale <= 0.0:
            _fail(f"{path}.scale", "must be positive")
        exps = doc.get("exponents")
        if not isinstance(exps, dict) or not exps:
            _fail(f"{path}.exponents", "must be a non-empty object")
        out = {}
        for mover, b in exps.items():
            if not isinstance(b, (int, float)) or isinstance(b, bool) \
                    or not math.isfinite(float(b)) or float(b) < 0.0:
                _fail(f"{path}.exponents.{mover}",
                      "must be a finite number >= 0")
            out[str(mover)] = float(b)
        total = sum(out.values())
        if total <= 0.0:
            _fail(f"{path}.exponents", "at least one exponent must be > 0")
        if total >= 1.0:
            _fail(f"{path}.exponents",
                  f"returns to scale must be < 1 (got {total:g})")
        return CobbDouglas(scale=scale, exponents=out)
    if kind == "fixed_proportions":
        _check_keys(doc, {"kind", "requirements", "curvature"}, path)
        reqs = doc.get("requirements")
        if not isinstance(reqs, dict) or not reqs:
            _fail(f"{path}.requirements", "must be a non-empty object")
        out = {}
        for mover, nu in reqs.items():
            if not isinstance(nu, (int, float)) or isinstance(nu, bool) \
                    or not math.isfinite(float(nu)) or float(nu) < 0.0:
                _fail(f"{path}.requirements.{mover}",
                      "must be a finite number >= 0")
            out[str(mover)] = float(nu)
        if not any(v > 0.0 for v in out.values()):
            _fail(f"{path}.requirements", "at least one coefficient must be > 0")
        curv = doc.get("curvature", {})
        if not isinstance(curv, dict):
            _fail(f"{path}.curvature", "must be an object")
        cpath = f"{path}.curvature"
        _check_keys(curv, {"c0", "c1", "tau", "c2", "q_s", "rho"}, cpath)
        c0 = _num(curv, "c0", cpath)
        c1 = _num(curv, "c1", cpath, default=0.0, required=False)
        tau = _num(curv, "tau", cpath, default=1.0, required=False)
        c2 = _num(curv, "c2", cpath, default=0.0, required=False)
        q_s = _num(curv, "q_s", cpath, default=1.0, required=False)
        rho = _num(curv, "rho", cpath, default=1.0, required=False)
        if c0 <= 0.0:
            _fail(f"{cpath}.c0", "must be positive")
        if c1 < 0.0:
            _fail(f"{cpath}.c1", "must be >= 0")
        if tau <= 0.0:
            _fail(f"{cpath}.tau", "must be positive")
        if c2 < 0.0:
            _fail(f"{cpath}.c2", "must be >= 0")
        if q_s <= 0.0:
            _fail(f"{cpath}.q_s", "must be positive")
        if rho < 1.0:
            _fail(f"{cpath}.rho", "must be >= 1")
        return FixedProportions(requirements=out, c0=c0, c1=c1, tau=tau,
                                c2=c2, q_s=q_s, rho=rho)
    _fail(f"{path}.kind",
          "must be 'cobb_douglas' or 'fixed_proportions'")


def _parse_mover(doc, path: str, period_length: float) -> PrimeMoverType:
    _check_keys(doc, {"id", "power_rate", "depreciation", "avg_embodied",
                      "endowment", "max_accum_rate", "intro_period"}, path)
    mid = doc.get("id")
    if not isinstance(mid, str) or not mid:
        _fail(f"{path}.id", "must be a non-empty string")
    p = _num(doc, "power_rate", path)
    if p <= 0.0:
        _fail(f"{path}.power_rate", "must be positive")
    d = _num(doc, "depreciation", path)
    if not 0.0 < d < 1.0:
        _fail(f"{path}.depreciation", f"must be in (0,1) (got {d:g})")
    gamma_a = _num(doc, "avg_embodied", path)
    if gamma_a < 0.0:
        _fail(f"{path}.avg_embodied", "must be >= 0")
    endow = _num(doc, "endowment", path)
    if endow < 0.0:
        _fail(f"{path}.endowment", "must be >= 0")
    rate = _num(doc, "max_accum_rate", path, default=0.0, required=False)
    if rate < 0.0:
        _fail(f"{path}.max_accum_rate", "must be >= 0")
    intro = _intval(doc, "intro_period", path)
    if intro < 0:
        _fail(f"{path}.intro_period", "must be >= 0")
    return PrimeMoverType(id=mid, power_rate=p, period_length=period_length,
                          depreciation=d, avg_embodied=gamma_a,
                          endowment=endow, max_accum_rate=rate,
                          intro_period=intro)


def _parse_energy_good(doc, path: str) -> EnergyGood:
    _check_keys(doc, {"id", "energy_content", "technology", "pes_stock",
                      "depletion_exponent", "requirement_multiplier",
                      "intro_period"}, path)
    gid = doc.get("id")
    if not isinstance(gid, str) or not gid:
        _fail(f"{path}.id", "must be a non-empty string")
    delta = _num(doc, "energy_content", path)
    if delta <= 0.0:
        _fail(f"{path}.energy_content", "must be positive")
    pes = doc.get("pes_stock")
    if pes is not None:
        pes = _num(doc, "pes_stock", path)
        if pes <= 0.0:
            _fail(f"{path}.pes_stock", "must be positive or null")
    theta = _num(doc, "depletion_exponent", path, default=0.0, required=False)
    if theta < 0.0:
        _fail(f"{path}.depletion_exponent", "must be >= 0")
    if pes is None and theta != 0.0:
        _fail(f"{path}.depletion_exponent",
              "must be 0 when pes_stock is unbounded")
    mult = _num(doc, "requirement_multiplier", path, default=1.0,
                required=False)
    if mult <= 0.0:
        _fail(f"{path}.requirement_multiplier", "must be positive")
    intro = _intval(doc, "intro_period", path)
    if intro < 0:
        _fail(f"{path}.intro_period", "must be >= 0")
    tech = _parse_technology(doc.get("technology"), f"{path}.technology")
    return EnergyGood(id=gid, energy_content=delta, technology=tech,
                      pes_stock=pes, depletion_exponent=theta,
                      requirement_multiplier=mult, intro_period=intro)


def _parse_non_energy_good(doc, path: str) -> NonEnergyGood:
    _check_keys(doc, {"id", "technology", "utility_weight",
                      "requirement_multiplier", "intro_period"}, path)
    gid = doc.get("id")
    if not isinstance(gid, str) or not gid:
        _fail(f"{path}.id", "must be a non-empty string")
    w = _num(doc, "utility_weight", path)
    if w <= 0.0:
        _fail(f"{path}.utility_weight", "must be positive")
    mult = _num(doc, "requirement_multiplier", path, default=1.0,
                required=False)
    if mult <= 0.0:
        _fail(f"{path}.requirement_multiplier", "must be positive")
    intro = _intval(doc, "intro_period", path)
    if intro < 0:
        _fail(f"{path}.intro_period", "must be >= 0")
    tech = _parse_technology(doc.get("technology"), f"{path}.technology")
    return NonEnergyGood(id=gid, technology=tech, utility_weight=w,
                         requirement_multiplier=mult, intro_period=intro)


def _parse_preferences(doc, path: str,
                       goods: tuple[NonEnergyGood, ...]) -> Preferences:
    if not isinstance(doc, dict):
        _fail(path, "must be an object")
    _check_keys(doc, {"form", "weights", "elasticity"}, path)
    form = doc.get("form", "cobb_douglas")
    if form not in ("cobb_douglas", "ces"):
        _fail(f"{path}.form", "must be 'cobb_douglas' or 'ces'")
    weights = {g.id: g.utility_weight for g in goods}
    if "weights" in doc:
        given = doc["weights"]
        if not isinstance(given, dict):
            _fail(f"{path}.weights", "must be an object")
        for gid, w in given.items():
            if gid not in weights:
                _fail(f"{path}.weights.{gid}", "unknown non-energy good")
            if not isinstance(w, (int, float)) or isinstance(w, bool) \
                    or not math.isfinite(float(w)) or float(w) <= 0.0:
                _fail(f"{path}.weights.{gid}", "must be a positive number")
            weights[gid] = float(w)
    sigma = None
    if form == "ces":
        sigma = _num(doc, "elasticity", path)
        if sigma <= 0.0 or sigma == 1.0:
            _fail(f"{path}.elasticity", "must be > 0 and != 1")
    elif "elasticity" in doc:
        _fail(f"{path}.elasticity", "only valid for CES preferences")
    return Preferences(form=form, weights=weights, elasticity=sigma)


def _parse_event(doc, path: str, period_length: float,
                 known_movers: set[str], known_goods: set[str]) -> EventSpec:
    if not isinstance(doc, dict):
        _fail(path, "must be an object")
    kind = doc.get("kind")
    if kind not in EVENT_KINDS:
        _fail(f"{path}.kind", f"must be one of {', '.join(EVENT_KINDS)}")
    period = _intval(doc, "period", path)
    if period < 0:
        _fail(f"{path}.period", "must be >= 0")
    if kind in ("efficiency_shift", "meec_shift"):
        _check_keys(doc, {"kind", "period", "good", "multiplier"}, path)
        good = doc.get("good")
        if good not in known_goods:
            _fail(f"{path}.good", f"unknown good id {good!r}")
        mult = _num(doc, "multiplier", path)
        if mult <= 0.0:
            _fail(f"{path}.multiplier", "must be positive")
        if kind == "efficiency_shift" and mult >= 1.0:
            _fail(f"{path}.multiplier",
                  "efficiency shift must be < 1 (it lowers requirements)")
        if kind == "meec_shift" and mult <= 1.0:
            _fail(f"{path}.multiplier",
                  "deterioration shift must be > 1 (it raises requirements)")
        return EventSpec(period=period, kind=kind, good=good, multiplier=mult)
    if kind == "endowment_shock":
        _check_keys(doc, {"kind", "period", "mover", "delta"}, path)
        mover = doc.get("mover")
        if mover not in known_movers:
            _fail(f"{path}.mover", f"unknown prime mover id {mover!r}")
        delta = _num(doc, "delta", path)
        return EventSpec(period=period, kind=kind, mover=mover, delta=delta)
    if kind == "new_prime_mover":
        _check_keys(doc, {"kind", "period", "mover"}, path)
        payload = doc.get("mover")
        if not isinstance(payload, dict):
            _fail(f"{path}.mover", "must be an object")
        new = _parse_mover(payload, f"{path}.mover", period_length)
        if new.id in known_movers:
            _fail(f"{path}.mover.id", f"duplicate prime mover id {new.id!r}")
        known_movers.add(new.id)
        return EventSpec(period=period, kind=kind,
                         new_mover=replace(new, intro_period=period))
    # new_energy_good
    _check_keys(doc, {"kind", "period", "good"}, path)
    payload = doc.get("good")
    if not isinstance(payload, dict):
        _fail(f"{path}.good", "must be an object")
    new = _parse_energy_good(payload, f"{path}.good")
    if new.id in known_goods:
        _fail(f"{path}.good.id", f"duplicate good id {new.id!r}")
    known_goods.add(new.id)
    return EventSpec(period=period, kind=kind,
                     new_good=replace(new, intro_period=period))


def _parse_solver(doc, path: str) -> SolverSettings:
    if not isinstance(doc, dict):
        _fail(path, "must be an object")
    _check_keys(doc, {"tolerances", "seed", "substeps",
                      "accum_normalization", "force_phi"}, path)
    tols = doc.get("tolerances", {})
    if not isinstance(tols, dict):
        _fail(f"{path}.tolerances", "must be an object")
    tpath = f"{path}.tolerances"
    allowed = {"phi", "q_rtol", "foc", "quadrature", "slack",
               "ss_accum", "ss_alpha"}
    _check_keys(tols, allowed, tpath)
    defaults = SolverSettings()
    values = {
        "phi_tol": _num(tols, "phi", tpath, default=defaults.phi_tol,
                        required=False),
        "q_rtol": _num(tols, "q_rtol", tpath, default=defaults.q_rtol,
                       required=False),
        "foc_tol": _num(tols, "foc", tpath, default=defaults.foc_tol,
                        required=False),
        "quad_tol": _num(tols, "quadrature", tpath,
                         default=defaults.quad_tol, required=False),
        "slack_tol": _num(tols, "slack", tpath, default=defaults.slack_tol,
                          required=False),
        "ss_accum_tol": _num(tols, "ss_accum", tpath,
                             default=defaults.ss_accum_tol, required=False),
        "ss_alpha_tol": _num(tols, "ss_alpha", tpath,
                             default=defaults.ss_alpha_tol, required=False),
    }
    for name, v in values.items():
        if v <= 0.0:
            _fail(f"{tpath}.{name}", "tolerances must be positive")
    seed = _intval(doc, "seed", path, default=defaults.seed)
    substeps = _intval(doc, "substeps", path, default=defaults.substeps)
    if substeps < 1:
        _fail(f"{path}.substeps", "must be >= 1")
    norm = doc.get("accum_normalization", "own_eps")
    if norm != "own_eps":
        if not isinstance(norm, (int, float)) or isinstance(norm, bool) \
                or not math.isfinite(float(norm)) or float(norm) <= 0.0:
            _fail(f"{path}.accum_normalization",
                  "must be 'own_eps' or a positive number")
        norm = float(norm)
    force_phi = doc.get("force_phi")
    if force_phi is not None:
        force_phi = _num(doc, "force_phi", path)
        if not 0.0 <= force_phi < 1.0:
            _fail(f"{path}.force_phi", "must be in [0, 1)")
    return SolverSettings(seed=seed, substeps=substeps,
                          accum_normalization=norm, force_phi=force_phi,
                          **values)


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ScenarioValidationError("$", "scenario must be a JSON object")
    _check_keys(doc, {"period_length", "prime_movers", "energy_goods",
                      "non_energy_goods", "preferences", "events", "solver",
                      "horizon"}, "$")
    dt = _num(doc, "period_length", "$")
    if dt <= 0.0:
        _fail("$.period_length", "must be positive")

    raw_movers = doc.get("prime_movers")
    if not isinstance(raw_movers, list) or not raw_movers:
        _fail("$.prime_movers", "must be a non-empty array")
    movers = tuple(_parse_mover(m, f"$.prime_movers[{i}]", dt)
                   for i, m in enumerate(raw_movers))
    mover_ids = [m.id for m in movers]
    if len(set(mover_ids)) != len(mover_ids):
        _fail("$.prime_movers", "prime mover ids must be unique")

    raw_eg = doc.get("energy_goods")
    if not isinstance(raw_eg, list) or not raw_eg:
        _fail("$.energy_goods", "must be a non-empty array")
    e_goods = tuple(_parse_energy_good(g, f"$.energy_goods[{i}]")
                    for i, g in enumerate(raw_eg))

    raw_ng = doc.get("non_energy_goods")
    if not isinstance(raw_ng, list) or not raw_ng:
        _fail("$.non_energy_goods", "must be a non-empty array")
    n_goods = tuple(_parse_non_energy_good(g, f"$.non_energy_goods[{i}]")
                    for i, g in enumerate(raw_ng))

    good_ids = [g.id for g in e_goods] + [g.id for g in n_goods]
    if len(set(good_ids)) != len(good_ids):
        _fail("$.energy_goods", "good ids must be unique across all goods")

    if not any(g.intro_period == 0 for g in e_goods):
        _fail("$.energy_goods", "at least one must be active at period 0")
    if not any(g.intro_period == 0 for g in n_goods):
        _fail("$.non_energy_goods", "at least one must be active at period 0")

    known = set(mover_ids)
    for i, g in enumerate(list(e_goods) + list(n_goods)):
        kind = ("energy_goods" if i < len(e_goods) else "non_energy_goods")
        idx = i if i < len(e_goods) else i - len(e_goods)
        for m in g.technology.used_movers():
            if m not in known:
                _fail(f"$.{kind}[{idx}].technology",
                      f"references unknown prime mover {m!r}")

    preferences = _parse_preferences(doc.get("preferences", {}),
                                     "$.preferences", n_goods)

    raw_events = doc.get("events", [])
    if not isinstance(raw_events, list):
        _fail("$.events", "must be an array")
    known_goods = set(good_ids)
    known_movers = set(mover_ids)
    events = tuple(_parse_event(e, f"$.events[{i}]", dt, known_movers,
                                known_goods)
                   for i, e in enumerate(raw_events))
    for i, ev in enumerate(events):
        if ev.kind == "new_energy_good":
            for m in ev.new_good.technology.used_movers():
                if m not in known_movers:
                    _fail(f"$.events[{i}].good.technology",
                          f"references unknown prime mover {m!r}")

    solver = _parse_solver(doc.get("solver", {}), "$.solver")
    horizon = _intval(doc, "horizon", "$", default=500)
    if horizon < 0:
        _fail("$.horizon", "must be >= 0")

    return ScenarioConfig(period_length=dt, prime_movers=movers,
                          energy_goods=e_goods, non_energy_goods=n_goods,
                          preferences=preferences, events=events,
                          solver=solver, horizon=horizon)


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, exc.lineno, exc.colno) from exc
    return scenario_from_dict(doc)


# ---------------------------------------------------------------------------
# serialization (round-trip with load_scenario)
# ---------------------------------------------------------------------------

def _technology_to_dict(tech: Technology) -> dict:
    if isinstance(tech, CobbDouglas):
        return {"kind": tech.kind, "scale": tech.scale,
                "exponents": dict(tech.exponents)}
    return {"kind": tech.kind, "requirements": dict(tech.requirements),
            "curvature": {"c0": tech.c0, "c1": tech.c1, "tau": tech.tau,
                          "c2": tech.c2, "q_s": tech.q_s, "rho": tech.rho}}


def _mover_to_dict(m: PrimeMoverType) -> dict:
    return {"id": m.id, "power_rate": m.power_rate,
            "depreciation": m.depreciation, "avg_embodied": m.avg_embodied,
            "endowment": m.endowment, "max_accum_rate": m.max_accum_rate,
            "intro_period": m.intro_period}


def _energy_good_to_dict(g: EnergyGood) -> dict:
    return {"id": g.id, "energy_content": g.energy_content,
            "technology": _technology_to_dict(g.technology),
            "pes_stock": g.pes_stock,
            "depletion_exponent": g.depletion_exponent,
            "requirement_multiplier": g.requirement_multiplier,
            "intro_period": g.intro_period}


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Plain-JSON form of a scenario; load_scenario of it compares equal."""
    events = []
    for ev in cfg.events:
        out = {"period": ev.period, "kind": ev.kind}
        if ev.kind in ("efficiency_shift", "meec_shift"):
            out["good"] = ev.good
            out["multiplier"] = ev.multiplier
        elif ev.kind == "endowment_shock":
            out["mover"] = ev.mover
            out["delta"] = ev.delta
        elif ev.kind == "new_prime_mover":
            out["mover"] = _mover_to_dict(ev.new_mover)
        else:
            out["good"] = _energy_good_to_dict(ev.new_good)
        events.append(out)
    s = cfg.solver
    prefs = {"form": cfg.preferences.form,
             "weights": dict(cfg.preferences.weights)}
    if cfg.preferences.elasticity is not None:
        prefs["elasticity"] = cfg.preferences.elasticity
    return {
        "period_length": cfg.period_length,
        "prime_movers": [_mover_to_dict(m) for m in cfg.prime_movers],
        "energy_goods": [_energy_good_to_dict(g) for g in cfg.energy_goods],
        "non_energy_goods": [
            {"id": g.id, "technology": _technology_to_dict(g.technology),
             "utility_weight": g.utility_weight,
             "requirement_multiplier": g.requirement_multiplier,
             "intro_period": g.intro_period}
            for g in cfg.non_energy_goods],
        "preferences": prefs,
        "events": events,
        "solver": {
            "tolerances": {"phi": s.phi_tol, "q_rtol": s.q_rtol,
                           "foc": s.foc_tol, "quadrature": s.quad_tol,
                           "slack": s.slack_tol, "ss_accum": s.ss_accum_tol,
                           "ss_alpha": s.ss_alpha_tol},
            "seed": s.seed,
            "substeps": s.substeps,
            "accum_normalization": s.accum_normalization,
            "force_phi": s.force_phi,
        },
        "horizon": cfg.horizon,
    }


def serialize_scenario(cfg: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def scenario_digest(doc: dict | str) -> str:
    """Content hash of a scenario document, stable under key reordering."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()
