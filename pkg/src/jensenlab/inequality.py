"""Parameter admissibility, defect evaluation, and empirical control envelopes.

Two inequality families are supported. Writing E = f for brevity, the
evaluated expressions are

  family A:  ||f(x+y+az) + f(x+y-az) - 2f(x) - 2f(y)||
             <= |rho1| ||f(x+y+az) - f(x+y) - f(az)||
              + |rho2| ||f(x+y-az) + f(-x) + f(az-y)||

  family B:  ||f(x+by+az) - f(x-az) - b f(y) - 2 f(az)||
             <= |rho1| ||f(x+az) - f(x) - f(az)||
              + |rho2| ||f(x+by-az) - f(x) - b f(y) + f(az)||

with a = alpha, b = beta real and nonzero. The defect of a triple is the
signed value lhs_norm - rhs_norm: the inequality holds with control phi
exactly when defect <= phi(x, y, z). Admissibility is strict, as printed:

  family A:  |rho1| + 3 |rho2| < 2
  family B:  |rho2| < 1  and  |beta + 2| >= |rho1| + |rho2 (1 - beta)|
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateParameterError, EmptySampleError, FamilyError, InadmissibleError
from .model import TestFunction, evaluate
from .space import SamplePlan, draw_samples

FAMILIES = ("A", "B")


@dataclass(frozen=True)
class RhoParams:
    """Inequality parameters: complex rho1/rho2, real alpha (both families),
    real beta (family B only; ignored by family A)."""

    family: str
    rho1: complex
    rho2: complex
    alpha: float
    beta: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise FamilyError(f"family: expected one of {FAMILIES}, got {self.family!r}")

    def _check_degenerate(self):
        if self.alpha == 0:
            raise DegenerateParameterError("degenerate-parameter: alpha = 0")
        if self.family == "B" and not self.beta:
            raise DegenerateParameterError("degenerate-parameter: family B requires beta != 0")


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    detail: str

    def __bool__(self) -> bool:
        return self.ok


def admissible(params: RhoParams) -> Admissibility:
    """Strict admissibility check with a diagnostic naming the violated condition.

    |rho2| is surfaced separately in the family-A diagnostic because the
    oddness step of the additivity argument relies on |rho2| < 1 (implied by
    the main condition, since 3 |rho2| < 2).
    """
    params._check_degenerate()
    r1 = abs(params.rho1)
    r2 = abs(params.rho2)
    if params.family == "A":
        lhs = r1 + 3 * r2
        detail = f"family A: |rho1| + 3|rho2| = {lhs:.6g} (need < 2); |rho2| = {r2:.6g}"
        return Admissibility(lhs < 2.0, detail)
    b = float(params.beta)
    cond1 = r2 < 1.0
    lhs = abs(b + 2.0)
    rhs = r1 + r2 * abs(1.0 - b)
    cond2 = lhs >= rhs
    detail = (f"family B: |rho2| = {r2:.6g} (need < 1); "
              f"|beta+2| = {lhs:.6g} vs |rho1| + |rho2(1-beta)| = {rhs:.6g} (need >=)")
    return Admissibility(cond1 and cond2, detail)


@dataclass(frozen=True, eq=False)
class DefectSample:
    """One evaluated triple. ``defect = lhs_norm - rhs_norm`` exactly as computed."""

    family: str
    triple: tuple
    x_norm: float
    y_norm: float
    z_norm: float
    lhs_norm: float
    rhs_norm: float
    defect: float


def defect_a(f: TestFunction, x, y, z, params: RhoParams) -> DefectSample:
    if params.family != "A":
        raise FamilyError(f"family: defect_a requires family A params, got {params.family}")
    sp = f.space
    x = sp.as_vector(x)
    y = sp.as_vector(y)
    z = sp.as_vector(z)
    a = params.alpha
    az = a * z
    lhs = evaluate(f, x + y + az) + evaluate(f, x + y - az) - 2 * evaluate(f, x) - 2 * evaluate(f, y)
    e1 = evaluate(f, x + y + az) - evaluate(f, x + y) - evaluate(f, az)
    e2 = evaluate(f, x + y - az) + evaluate(f, -x) + evaluate(f, az - y)
    lhs_norm = sp.norm(lhs)
    rhs_norm = abs(params.rho1) * sp.norm(e1) + abs(params.rho2) * sp.norm(e2)
    return DefectSample("A", (x, y, z), sp.norm(x), sp.norm(y), sp.norm(z),
                        lhs_norm, rhs_norm, lhs_norm - rhs_norm)


def defect_b(f: TestFunction, x, y, z, params: RhoParams) -> DefectSample:
    if params.family != "B":
        raise FamilyError(f"family: defect_b requires family B params, got {params.family}")
    params._check_degenerate()
    sp = f.space
    x = sp.as_vector(x)
    y = sp.as_vector(y)
    z = sp.as_vector(z)
    a = params.alpha
    b = float(params.beta)
    az = a * z
    lhs = evaluate(f, x + b * y + az) - evaluate(f, x - az) - b * evaluate(f, y) - 2 * evaluate(f, az)
    e1 = evaluate(f, x + az) - evaluate(f, x) - evaluate(f, az)
    e2 = evaluate(f, x + b * y - az) - evaluate(f, x) - b * evaluate(f, y) + evaluate(f, az)
    lhs_norm = sp.norm(lhs)
    rhs_norm = abs(params.rho1) * sp.norm(e1) + abs(params.rho2) * sp.norm(e2)
    return DefectSample("B", (x, y, z), sp.norm(x), sp.norm(y), sp.norm(z),
                        lhs_norm, rhs_norm, lhs_norm - rhs_norm)


def defect(f: TestFunction, x, y, z, params: RhoParams) -> DefectSample:
    """Family-dispatching defect evaluation."""
    if params.family == "A":
        return defect_a(f, x, y, z, params)
    return defect_b(f, x, y, z, params)


DEFECT_CSV_HEADER = "family,x_norm,y_norm,z_norm,lhs,rhs,defect"


def defect_samples_csv(samples) -> str:
    """CSV export of a DefectSample list (17 significant digits, stable)."""
    lines = [DEFECT_CSV_HEADER]
    for s in samples:
        lines.append(",".join([
            s.family,
            f"{s.x_norm:.17g}", f"{s.y_norm:.17g}", f"{s.z_norm:.17g}",
            f"{s.lhs_norm:.17g}", f"{s.rhs_norm:.17g}", f"{s.defect:.17g}",
        ]))
    return "\n".join(lines) + "\n"


# --- measured control envelopes ---------------------------------------------


@dataclass(frozen=True, eq=False)
class MeasuredEnvelope:
    """Shell-wise empirical envelope of the clamped defect.

    Each sampled triple contributes max(0, defect) to the shell containing its
    largest component norm. Evaluation is separable,
    ``e(||x||) + e(||y||) + e(||z||)``, where e is the monotone (cumulative
    max) step extension of the shell table: e(0) = 0, values below the first
    edge use the first shell, values above the last edge use the global max.
    ``fit_theta`` / ``fit_r`` is a least-squares power-law fit
    defect ~ theta (||x||^r + ||y||^r + ||z||^r) over the same samples.
    """

    edges: np.ndarray
    shell_max: np.ndarray
    cum_max: np.ndarray
    fit_theta: float
    fit_r: float
    sample_count: int

    def component_value(self, s: float) -> float:
        if s == 0.0:
            return 0.0
        if s > self.edges[-1]:
            return float(self.cum_max[-1])
        idx = int(np.searchsorted(self.edges, s, side="left")) - 1
        idx = min(max(idx, 0), len(self.cum_max) - 1)
        return float(self.cum_max[idx])

    def evaluate_norms(self, nx: float, ny: float, nz: float) -> float:
        return (self.component_value(nx) + self.component_value(ny)
                + self.component_value(nz))


def _fit_power_law(norms: np.ndarray, defects: np.ndarray) -> tuple[float, float]:
    """Least squares for defect ~ theta (a^r + b^r + c^r); theta >= 0."""
    d = np.clip(defects, 0.0, None)
    if d.max(initial=0.0) <= 1e-14:
        return 0.0, 0.0

    def theta_for(r: float) -> float:
        g = (norms ** r).sum(axis=1)
        denom = float(g @ g)
        if denom == 0.0:
            return 0.0
        return max(float(g @ d) / denom, 0.0)

    def sse(r: float) -> float:
        g = (norms ** r).sum(axis=1)
        return float(((theta_for(r) * g - d) ** 2).sum())

    grid = np.linspace(-2.0, 6.0, 161)
    best = min(grid, key=sse)
    res = minimize_scalar(sse, bounds=(best - 0.1, best + 0.1), method="bounded")
    r_hat = float(res.x) if res.success else float(best)
    return theta_for(r_hat), r_hat


def measure_envelope(f: TestFunction, params: RhoParams, plan: SamplePlan,
                     shells: int = 8) -> MeasuredEnvelope:
    """Sample triples, bucket clamped defects into log-spaced norm shells."""
    adm = admissible(params)
    if not adm:
        raise InadmissibleError(f"inadmissible: {adm.detail}")
    triples = draw_samples(f.space, plan, arity=3)
    if not triples:
        raise EmptySampleError("empty-sample: envelope needs at least one triple")
    if shells < 1:
        raise ValueError(f"shells must be positive, got {shells}")

    lo = plan.inner_radius()
    edges = np.geomspace(lo, plan.radius, shells + 1)
    shell_max = np.zeros(shells)
    norms = np.empty((len(triples), 3))
    defects = np.empty(len(triples))
    for i, (x, y, z) in enumerate(triples):
        s = defect(f, x, y, z, params)
        norms[i] = (s.x_norm, s.y_norm, s.z_norm)
        defects[i] = s.defect
        top = max(s.x_norm, s.y_norm, s.z_norm)
        idx = min(max(int(np.searchsorted(edges, top, side="left")) - 1, 0), shells - 1)
        shell_max[idx] = max(shell_max[idx], max(0.0, s.defect))

    theta_hat, r_hat = _fit_power_law(norms, defects)
    return MeasuredEnvelope(edges=edges, shell_max=shell_max,
                            cum_max=np.maximum.accumulate(shell_max),
                            fit_theta=theta_hat, fit_r=r_hat,
                            sample_count=len(triples))


def scale_of(f: TestFunction, points) -> float:
    """Rough magnitude of f over a point set, floored at 1; used to express
    'tiny relative to f' in tolerance checks."""
    best = 1.0
    for p in points:
        best = max(best, f.space.norm(evaluate(f, p)))
    return best
