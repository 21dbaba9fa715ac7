"""Control functions, truncated stability series, closed-form constants, audit.

The stability bound for each scheme is a weighted series over the control
phi, assembled from the one-step contraction inequality of that scheme. With
p2 = |rho2| and L = |scale|, the derivation-consistent forms are

  family A, forward (L = 2):
      sum_i 2^-(i+1) (2-p2)^-1 [phi(2^i x, 2^i x, 0)
                                + 2 p2/(1-p2) phi(0, 0, 2^i x / alpha)]
  family A, backward (L = 2):
      sum_i 2^i (2-p2)^-1 [phi(x/2^(i+1), x/2^(i+1), 0)
                           + 2 p2/(1-p2) phi(0, 0, x/(2^(i+1) alpha))]
  family B, forward:
      sum_i L^-(i+1) (1-p2)^-1 phi(s^i x, s^i x, 0)          (s = scale)
  family B, backward:
      sum_i L^i (1-p2)^-1 phi(x/s^(i+1), x/s^(i+1), 0)

``printed_display=True`` reproduces the published display forms instead,
which differ at exactly two audited points: the family-A forward series
drops the /alpha in the third argument, and the family-B forward prefactor
uses (1-|rho1|) in place of (1-|rho2|). The defaults are the forms that the
telescoping argument actually guarantees to dominate ||f - A||.

Power controls evaluate as theta (||x||^r + ||y||^r + ||z||^r) with the
convention that a zero norm contributes 0 for every r (the substituted
series above rely on it, e.g. phi(x, x, 0) = 2 theta ||x||^r).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .direct_method import Scheme
from .errors import (
    DegenerateScaleError,
    DivergentSeriesError,
    FamilyError,
    InadmissibleError,
    NotConvergedError,
    OutOfRegimeError,
    SingularPointError,
)
from .inequality import MeasuredEnvelope, RhoParams
from .model import TestFunction, evaluate
from .space import NormedSpace

CONTROL_KINDS = ("zero", "power", "tabulated", "measured")

#: Closed-form constant tags: forward/backward dyadic (family A) and
#: forward/backward general-scale (family B) regimes.
CONSTANT_TAGS = ("c24", "c26", "c34", "c36")

DEFAULT_TRUNC_TERMS = 64


class _CoverageMiss(Exception):
    """Internal: a tabulated control was queried outside its shell coverage."""


def _pw(n: float, r: float) -> float:
    """n^r with the zero-norm-contributes-0 convention."""
    return 0.0 if n == 0.0 else float(n) ** r


@dataclass(frozen=True, eq=False)
class ControlFunction:
    """Nonnegative control phi(x, y, z), evaluated on the three norms.

    kinds:
      zero       phi = 0
      power      theta (||x||^r + ||y||^r + ||z||^r)
      tabulated  user shell table: value of the shell containing each norm,
                 summed over the three arguments; norms outside coverage stop
                 a series sum rather than extrapolate
      measured   a MeasuredEnvelope (monotone extension covers all norms)
    """

    kind: str
    theta: float = 0.0
    r: float = 0.0
    edges: np.ndarray | None = None
    values: np.ndarray | None = None
    envelope: MeasuredEnvelope | None = None

    def __post_init__(self):
        if self.kind not in CONTROL_KINDS:
            raise ValueError(f"control kind must be one of {CONTROL_KINDS}")
        if self.kind == "power" and self.theta < 0:
            raise ValueError("power control needs theta >= 0")

    @classmethod
    def zero(cls) -> "ControlFunction":
        return cls("zero")

    @classmethod
    def power(cls, theta: float, r: float) -> "ControlFunction":
        return cls("power", theta=float(theta), r=float(r))

    @classmethod
    def tabulated(cls, edges, values) -> "ControlFunction":
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(edges) != len(values) + 1 or len(values) < 1:
            raise ValueError("tabulated control needs len(edges) == len(values) + 1 >= 2")
        if (values < 0).any():
            raise ValueError("control values must be nonnegative")
        return cls("tabulated", edges=edges, values=values)

    @classmethod
    def measured(cls, envelope: MeasuredEnvelope) -> "ControlFunction":
        return cls("measured", envelope=envelope)

    def _component(self, s: float) -> float:
        if s == 0.0:
            return 0.0
        if self.kind == "tabulated":
            if s <= self.edges[0] or s > self.edges[-1]:
                raise _CoverageMiss(s)
            idx = int(np.searchsorted(self.edges, s, side="left")) - 1
            return float(self.values[min(max(idx, 0), len(self.values) - 1)])
        return self.envelope.component_value(s)

    def evaluate_norms(self, nx: float, ny: float, nz: float) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "power":
            return self.theta * (_pw(nx, self.r) + _pw(ny, self.r) + _pw(nz, self.r))
        return self._component(nx) + self._component(ny) + self._component(nz)

    def evaluate(self, space: NormedSpace, x, y, z) -> float:
        return self.evaluate_norms(space.norm(x), space.norm(y), space.norm(z))


@dataclass(frozen=True)
class SeriesSpec:
    """Which series to sum, and how far.

    ``family`` selects the series form ('A' dyadic two-term, 'B' single-term);
    it cannot be inferred from the scale alone since 1+beta = +/-2 collides
    with the dyadic scale. ``rho1_abs`` is only consulted by the
    printed-display variant of the family-B forward series.
    """

    scheme: Scheme
    family: str
    rho2_abs: float
    alpha: float
    trunc_terms: int = DEFAULT_TRUNC_TERMS
    tail_mode: str = "geometric"
    printed_display: bool = False
    rho1_abs: float = 0.0

    def __post_init__(self):
        if self.family not in ("A", "B"):
            raise FamilyError(f"family: expected A or B, got {self.family!r}")
        if self.family == "A" and abs(self.scheme.scale) != 2.0:
            raise FamilyError(
                f"family: family-A series are dyadic (|scale| = 2), got scale {self.scheme.scale}"
            )
        if self.trunc_terms < 1:
            raise ValueError("trunc_terms must be >= 1")
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero")
        if self.rho2_abs < 0 or self.rho1_abs < 0:
            raise ValueError("rho moduli must be nonnegative")
        if self.tail_mode not in ("geometric", "none"):
            raise ValueError("tail_mode must be 'geometric' or 'none'")


@dataclass(frozen=True)
class PhiTilde:
    """Truncated series value plus tail; ``tail`` is None when unavailable."""

    value: float
    tail: float | None
    terms: int
    coverage_truncated: bool = False

    def total(self) -> float:
        return self.value + (self.tail or 0.0)


def _series_term(control: ControlFunction, nx: float, spec: SeriesSpec, i: int) -> float:
    """The i-th series term for a query point of norm nx."""
    p2 = spec.rho2_abs
    L = abs(spec.scheme.scale)
    if spec.family == "A":
        w2 = 2.0 * p2 / (1.0 - p2)
        a = abs(spec.alpha)
        if spec.scheme.direction == "forward":
            s = (2.0 ** i) * nx
            third = s if spec.printed_display else s / a
            return 2.0 ** -(i + 1) / (2.0 - p2) * (
                control.evaluate_norms(s, s, 0.0) + w2 * control.evaluate_norms(0.0, 0.0, third)
            )
        s = nx / 2.0 ** (i + 1)
        return 2.0 ** i / (2.0 - p2) * (
            control.evaluate_norms(s, s, 0.0) + w2 * control.evaluate_norms(0.0, 0.0, s / a)
        )
    pref = 1.0 / (1.0 - (spec.rho1_abs if (spec.printed_display and
                                           spec.scheme.direction == "forward") else p2))
    if spec.scheme.direction == "forward":
        s = (L ** i) * nx
        return (L ** -(i + 1)) * pref * control.evaluate_norms(s, s, 0.0)
    s = nx / L ** (i + 1)
    return (L ** i) * pref * control.evaluate_norms(s, s, 0.0)


def _power_ratio(spec: SeriesSpec, r: float) -> float:
    L = abs(spec.scheme.scale)
    return L ** (r - 1.0) if spec.scheme.direction == "forward" else L ** (1.0 - r)


def _check_prefactors(spec: SeriesSpec):
    if spec.rho2_abs >= 1.0:
        raise InadmissibleError(
            f"inadmissible: series prefactor needs |rho2| < 1, got {spec.rho2_abs}"
        )
    if (spec.printed_display and spec.family == "B"
            and spec.scheme.direction == "forward" and spec.rho1_abs >= 1.0):
        raise InadmissibleError(
            f"inadmissible: printed display needs |rho1| < 1, got {spec.rho1_abs}"
        )


def phi_tilde_norm(control: ControlFunction, nx: float, spec: SeriesSpec) -> PhiTilde:
    """Truncated stability series for a query point of norm ``nx``."""
    _check_prefactors(spec)
    if control.kind == "zero":
        return PhiTilde(0.0, 0.0, spec.trunc_terms)
    if control.kind == "power":
        if nx == 0.0 and control.r < 0:
            raise SingularPointError("singular-point: ||x|| = 0 with r < 0")
        ratio = _power_ratio(spec, control.r)
        if control.theta > 0.0 and nx > 0.0 and ratio >= 1.0:
            raise DivergentSeriesError(
                f"divergent: series term ratio {ratio:.6g} >= 1 for r = {control.r}"
            )
        value = 0.0
        for i in range(spec.trunc_terms):
            value += _series_term(control, nx, spec, i)
        if spec.tail_mode == "geometric":
            tail = (_series_term(control, nx, spec, spec.trunc_terms) / (1.0 - ratio)
                    if ratio < 1.0 else 0.0)
            return PhiTilde(value, tail, spec.trunc_terms)
        return PhiTilde(value, None, spec.trunc_terms)
    # tabulated / measured: sum until coverage runs out; no closed tail.
    value = 0.0
    terms = 0
    truncated = False
    for i in range(spec.trunc_terms):
        try:
            value += _series_term(control, nx, spec, i)
        except _CoverageMiss:
            truncated = True
            break
        terms += 1
    return PhiTilde(value, None, terms, coverage_truncated=truncated)


def phi_tilde(control: ControlFunction, space: NormedSpace, x,
              spec: SeriesSpec) -> PhiTilde:
    """Series bound at a vector query point."""
    return phi_tilde_norm(control, space.norm(x), spec)


def corollary_constant(which: str, theta: float, r: float, rho2_abs: float,
                       beta: float | None = None) -> float:
    """The printed closed-form stability constants, exactly as published.

    c24 / c26: forward / backward dyadic regimes,
        2 theta / ((2 - 2^r)(1 - p2)(2 - p2))   and
        2^(1+r) theta / ((2^r - 1)(1 - p2)(2 - p2)).
    c34 / c36: forward / backward general-scale regimes with L = |1 + beta|,
        2 theta / ((L - L^r)(1 - p2))           and
        2 theta / ((L^r - L)(1 - p2)).

    Raises OutOfRegimeError when a printed denominator is not positive, naming
    the violated inequality.
    """
    if which not in CONSTANT_TAGS:
        raise ValueError(f"which must be one of {CONSTANT_TAGS}, got {which!r}")
    if theta < 0 or rho2_abs < 0:
        raise ValueError("theta and rho2_abs must be nonnegative")
    p2 = rho2_abs
    if p2 >= 1.0:
        raise OutOfRegimeError(f"out-of-regime: needs |rho2| < 1, got {p2}")
    if which in ("c24", "c26"):
        if which == "c24":
            denom = 2.0 - 2.0 ** r
            if denom <= 0:
                raise OutOfRegimeError(f"out-of-regime: c24 needs 2 - 2^r > 0 (r < 1), got r = {r}")
            return 2.0 * theta / (denom * (1.0 - p2) * (2.0 - p2))
        denom = 2.0 ** r - 1.0
        if denom <= 0:
            raise OutOfRegimeError(f"out-of-regime: c26 needs 2^r - 1 > 0 (r > 0), got r = {r}")
        return 2.0 ** (1.0 + r) * theta / (denom * (1.0 - p2) * (2.0 - p2))
    if beta is None:
        raise ValueError(f"{which} needs beta")
    L = abs(1.0 + beta)
    if L == 0.0 or L == 1.0:
        raise DegenerateScaleError(f"degenerate-scale: |1 + beta| = {L}")
    if which == "c34":
        denom = L - L ** r
        if denom <= 0:
            raise OutOfRegimeError(
                f"out-of-regime: c34 needs |1+beta| - |1+beta|^r > 0, got L = {L}, r = {r}"
            )
        return 2.0 * theta / (denom * (1.0 - p2))
    denom = L ** r - L
    if denom <= 0:
        raise OutOfRegimeError(
            f"out-of-regime: c36 needs |1+beta|^r - |1+beta| > 0, got L = {L}, r = {r}"
        )
    return 2.0 * theta / (denom * (1.0 - p2))


@dataclass(frozen=True)
class ConvergenceVerdict:
    converges: bool
    ratio: float
    condition: str

    def __bool__(self) -> bool:
        return self.converges


def convergence_predicate(scheme: Scheme, r: float) -> ConvergenceVerdict:
    """Analytic convergence of the power-control series: term ratio < 1.

    forward: |scale|^(r-1) < 1; backward: |scale|^(1-r) < 1. The evaluated
    ratio is returned alongside the verdict; a boundary ratio of exactly 1
    counts as divergent.
    """
    L = abs(scheme.scale)
    if L == 1.0:
        raise DegenerateScaleError("degenerate-scale: |scale| = 1")
    if scheme.direction == "forward":
        ratio = L ** (r - 1.0)
        condition = f"|scale|^(r-1) = {ratio:.6g} < 1"
    else:
        ratio = L ** (1.0 - r)
        condition = f"|scale|^(1-r) = {ratio:.6g} < 1"
    return ConvergenceVerdict(ratio < 1.0, ratio, condition)


@dataclass(frozen=True, eq=False)
class BoundAudit:
    """Reconciliation of the published constant, the derivation-consistent
    series constant, and the empirical supremum of ||f - A|| / ||x||^r.

    Constants are floats or the string 'divergent'. Verdicts:
      empirical_le_derived / empirical_le_paper: bool or None (constant divergent)
      derived_matches_paper: 'consistent' | 'mismatched' | None
    """

    which: str
    theta: float
    r: float
    rho2_abs: float
    alpha: float
    beta: float | None
    paper_constant: float | str
    derived_constant: float | str
    empirical_sup: float
    verdicts: dict
    points: int

    def to_json_dict(self) -> dict:
        return {
            "which": self.which,
            "theta": self.theta,
            "r": self.r,
            "rho2": self.rho2_abs,
            "alpha": self.alpha,
            "beta": self.beta,
            "paper_constant": self.paper_constant,
            "derived_constant": self.derived_constant,
            "empirical_sup": self.empirical_sup,
            "verdicts": dict(self.verdicts),
        }


AUDIT_REL_TOL = 1e-6


def constant_tag(family: str, direction: str) -> str:
    """Regime tag for a (family, as-written direction) pair."""
    table = {("A", "forward"): "c24", ("A", "backward"): "c26",
             ("B", "forward"): "c34", ("B", "backward"): "c36"}
    try:
        return table[(family, direction)]
    except KeyError:
        raise FamilyError(f"family: no constant for family={family!r}, direction={direction!r}")


def audit(f: TestFunction, params: RhoParams, scheme: Scheme,
          control: ControlFunction, points, tol: float = 1e-9,
          trunc_terms: int = DEFAULT_TRUNC_TERMS) -> BoundAudit:
    """Cross-validate the closed-form constant against the series and data.

    Requires a power control; ``empirical_sup`` is max ||f(x) - A(x)|| /
    ||x||^r over the supplied points, with A from ``approximate``.
    """
    from .direct_method import approximate

    if control.kind != "power":
        raise ValueError("audit requires a power control")
    which = constant_tag(params.family, scheme.direction)
    theta, r = control.theta, control.r
    p2 = abs(params.rho2)

    try:
        paper: float | str = corollary_constant(which, theta, r, p2, beta=params.beta)
    except OutOfRegimeError:
        paper = "divergent"

    spec = SeriesSpec(scheme=scheme, family=params.family, rho2_abs=p2,
                      alpha=params.alpha, trunc_terms=trunc_terms)
    try:
        derived: float | str = phi_tilde_norm(control, 1.0, spec).total()
    except (DivergentSeriesError, InadmissibleError):
        derived = "divergent"

    sup = 0.0
    count = 0
    for x in points:
        rep = approximate(f, x, scheme, tol)
        if not rep.converged:
            raise NotConvergedError("not-converged: audit point failed to converge")
        nx = f.space.norm(rep.point)
        if nx == 0.0:
            continue
        dev = f.space.norm(evaluate(f, rep.point) - rep.value)
        sup = max(sup, dev / nx**r)
        count += 1

    def le(bound):
        if isinstance(bound, str):
            return None
        return bool(sup <= bound * (1.0 + AUDIT_REL_TOL) + 1e-12)

    if isinstance(paper, str) or isinstance(derived, str):
        match = None
    else:
        match = ("consistent"
                 if abs(paper - derived) <= AUDIT_REL_TOL * max(abs(paper), abs(derived), 1e-300)
                 else "mismatched")
    verdicts = {
        "empirical_le_derived": le(derived),
        "empirical_le_paper": le(paper),
        "derived_matches_paper": match,
    }
    return BoundAudit(which=which, theta=theta, r=r, rho2_abs=p2, alpha=params.alpha,
                      beta=params.beta, paper_constant=paper, derived_constant=derived,
                      empirical_sup=sup, verdicts=verdicts, points=count)
