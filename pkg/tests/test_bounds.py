import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_additive, make_power

from jensenlab import (
    ControlFunction,
    RhoParams,
    SamplePlan,
    SeriesSpec,
    audit,
    backward,
    constant_tag,
    convergence_predicate,
    corollary_constant,
    draw_samples,
    forward,
    measure_envelope,
    phi_tilde_norm,
)
from jensenlab.errors import (
    DivergentSeriesError,
    FamilyError,
    InadmissibleError,
    OutOfRegimeError,
    SingularPointError,
)


def power_phi(theta, r):
    """Independent control evaluation for oracle sums (0^r contributes 0)."""
    def phi(a, b, c):
        return theta * sum(0.0 if s == 0 else s ** r for s in (a, b, c))
    return phi


def brute_forward_dyadic(theta, r, p2, alpha, nx, terms=300, display=False):
    phi = power_phi(theta, r)
    total = 0.0
    for i in range(terms):
        s = 2.0 ** i * nx
        third = s if display else s / abs(alpha)
        total += 2.0 ** -(i + 1) / (2 - p2) * (phi(s, s, 0) + 2 * p2 / (1 - p2) * phi(0, 0, third))
    return total


def brute_backward_dyadic(theta, r, p2, alpha, nx, terms=300):
    phi = power_phi(theta, r)
    total = 0.0
    for i in range(terms):
        s = nx / 2.0 ** (i + 1)
        total += 2.0 ** i / (2 - p2) * (phi(s, s, 0) + 2 * p2 / (1 - p2) * phi(0, 0, s / abs(alpha)))
    return total


def brute_family_b(theta, r, p2, scale, nx, direction, terms=300, pref_rho=None):
    phi = power_phi(theta, r)
    L = abs(scale)
    pref = 1.0 / (1.0 - (p2 if pref_rho is None else pref_rho))
    total = 0.0
    for i in range(terms):
        if direction == "forward":
            s = L ** i * nx
            total += L ** -(i + 1) * pref * phi(s, s, 0)
        else:
            s = nx / L ** (i + 1)
            total += L ** i * pref * phi(s, s, 0)
    return total


# --- controls ----------------------------------------------------------------


def test_control_evaluation():
    zero = ControlFunction.zero()
    assert zero.evaluate_norms(1.0, 2.0, 3.0) == 0.0
    pw = ControlFunction.power(0.5, 2.0)
    assert pw.evaluate_norms(1.0, 2.0, 0.0) == pytest.approx(0.5 * (1 + 4), rel=1e-15)
    # zero norms contribute nothing for any exponent
    neg = ControlFunction.power(1.0, -0.5)
    assert neg.evaluate_norms(4.0, 0.0, 0.0) == pytest.approx(0.5, rel=1e-15)


def test_tabulated_control_lookup():
    ctrl = ControlFunction.tabulated(edges=[0.1, 1.0, 10.0], values=[2.0, 5.0])
    assert ctrl.evaluate_norms(0.5, 0.0, 0.0) == 2.0
    assert ctrl.evaluate_norms(3.0, 0.5, 0.0) == 7.0


def test_series_spec_validation():
    with pytest.raises(FamilyError):
        SeriesSpec(scheme=forward(3.0), family="A", rho2_abs=0.0, alpha=1.0)
    with pytest.raises(ValueError):
        SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.0, alpha=0.0)
    with pytest.raises(ValueError):
        SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.0, alpha=1.0, trunc_terms=0)


# --- phi_tilde ---------------------------------------------------------------


def test_phi_tilde_zero_control():
    spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.3, alpha=1.0)
    pt = phi_tilde_norm(ControlFunction.zero(), 1.0, spec)
    assert pt.value == 0.0 and pt.tail == 0.0


def test_phi_tilde_spot_values():
    # theta=1, r=0.5, rho2=0, alpha=1, ||x||=1: 1/(2 - sqrt 2)
    spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.0, alpha=1.0)
    pt = phi_tilde_norm(ControlFunction.power(1.0, 0.5), 1.0, spec)
    assert pt.total() == pytest.approx(1.7071067811865475, rel=1e-12)
    # rho2 = 0.5: brute-force series gives 4.552284749830793
    spec2 = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.5, alpha=1.0)
    pt2 = phi_tilde_norm(ControlFunction.power(1.0, 0.5), 1.0, spec2)
    oracle = brute_forward_dyadic(1.0, 0.5, 0.5, 1.0, 1.0)
    assert oracle == pytest.approx(4.552284749830793, rel=1e-12)
    assert pt2.total() == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("r", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("p2", [0.0, 0.3, 0.6, 0.9])
def test_phi_tilde_matches_c24_at_unit_alpha(r, p2):
    for alpha in (1.0, -1.0):
        spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=p2, alpha=alpha)
        pt = phi_tilde_norm(ControlFunction.power(1.0, r), 1.5, spec)
        expected = corollary_constant("c24", 1.0, r, p2) * 1.5 ** r
        assert pt.total() == pytest.approx(expected, rel=1e-9)


def test_phi_tilde_alpha_dependence():
    # away from |alpha| = 1 the series and the printed constant split
    spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.5, alpha=2.0)
    pt = phi_tilde_norm(ControlFunction.power(1.0, 0.5), 1.0, spec)
    oracle = brute_forward_dyadic(1.0, 0.5, 0.5, 2.0, 1.0)
    assert pt.total() == pytest.approx(oracle, rel=1e-9)
    assert pt.total() != pytest.approx(corollary_constant("c24", 1.0, 0.5, 0.5), rel=1e-3)


def test_phi_tilde_printed_display_forward_dyadic():
    # display form drops the /alpha in the third argument
    spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.5, alpha=2.0,
                      printed_display=True)
    pt = phi_tilde_norm(ControlFunction.power(1.0, 0.5), 1.0, spec)
    assert pt.total() == pytest.approx(
        brute_forward_dyadic(1.0, 0.5, 0.5, 2.0, 1.0, display=True), rel=1e-9)
    # at |alpha| = 1 both forms agree
    s1 = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.5, alpha=1.0)
    s2 = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.5, alpha=1.0,
                    printed_display=True)
    c = ControlFunction.power(1.0, 0.5)
    assert phi_tilde_norm(c, 1.0, s1).total() == pytest.approx(
        phi_tilde_norm(c, 1.0, s2).total(), rel=1e-12)


def test_phi_tilde_backward_dyadic_matches_telescoping():
    # derived constant 2 theta / ((2^r - 2)(1 - p2)(2 - p2)), not the printed c26
    spec = SeriesSpec(scheme=backward(2.0), family="A", rho2_abs=0.0, alpha=1.0)
    pt = phi_tilde_norm(ControlFunction.power(1.0, 2.0), 1.0, spec)
    assert pt.total() == pytest.approx(0.5, rel=1e-9)
    assert pt.total() == pytest.approx(brute_backward_dyadic(1.0, 2.0, 0.0, 1.0, 1.0), rel=1e-9)
    for r, p2 in ((1.5, 0.0), (2.0, 0.3), (3.0, 0.6)):
        s = SeriesSpec(scheme=backward(2.0), family="A", rho2_abs=p2, alpha=1.0)
        got = phi_tilde_norm(ControlFunction.power(1.0, r), 1.0, s).total()
        derived = 2.0 / ((2.0 ** r - 2.0) * (1 - p2) * (2 - p2))
        assert got == pytest.approx(derived, rel=1e-9)
        assert got == pytest.approx(brute_backward_dyadic(1.0, r, p2, 1.0, 1.0), rel=1e-9)


@pytest.mark.parametrize("beta", [1.0, 2.0])
@pytest.mark.parametrize("r", [0.25, 0.5])
def test_phi_tilde_matches_c34(beta, r):
    scale = 1.0 + beta
    for p2 in (0.0, 0.3):
        spec = SeriesSpec(scheme=forward(scale), family="B", rho2_abs=p2, alpha=1.0)
        pt = phi_tilde_norm(ControlFunction.power(1.0, r), 2.0, spec)
        expected = corollary_constant("c34", 1.0, r, p2, beta=beta) * 2.0 ** r
        assert pt.total() == pytest.approx(expected, rel=1e-9)
        assert pt.total() == pytest.approx(
            brute_family_b(1.0, r, p2, scale, 2.0, "forward"), rel=1e-9)


def test_phi_tilde_matches_c36_contracting_scale():
    # backward scheme with |1 + beta| < 1 converges for r < 1
    beta = -1.5  # scale -0.5
    for r, p2 in ((0.5, 0.0), (0.25, 0.3)):
        spec = SeriesSpec(scheme=backward(-0.5), family="B", rho2_abs=p2, alpha=1.0)
        pt = phi_tilde_norm(ControlFunction.power(1.0, r), 1.0, spec)
        expected = corollary_constant("c36", 1.0, r, p2, beta=beta)
        assert pt.total() == pytest.approx(expected, rel=1e-9)
        assert pt.total() == pytest.approx(
            brute_family_b(1.0, r, p2, -0.5, 1.0, "backward"), rel=1e-9)


def test_phi_tilde_printed_display_family_b():
    # display prefactor swaps (1 - |rho2|) for (1 - |rho1|)
    c = ControlFunction.power(1.0, 0.5)
    spec = SeriesSpec(scheme=forward(2.0), family="B", rho2_abs=0.5, alpha=1.0,
                      printed_display=True, rho1_abs=0.2)
    assert phi_tilde_norm(c, 1.0, spec).total() == pytest.approx(
        brute_family_b(1.0, 0.5, 0.5, 2.0, 1.0, "forward", pref_rho=0.2), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(0.01, 100.0), r=st.floats(-0.5, 0.9))
def test_phi_tilde_homogeneity(c, r):
    spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.3, alpha=1.0)
    ctrl = ControlFunction.power(1.0, r)
    base = phi_tilde_norm(ctrl, 1.0, spec).total()
    scaled = phi_tilde_norm(ctrl, c, spec).total()
    assert scaled == pytest.approx(c ** r * base, rel=1e-12)


def test_phi_tilde_partial_sums_monotone():
    ctrl = ControlFunction.power(1.0, 0.5)
    values = []
    for n in (1, 2, 4, 8, 16, 64):
        spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.3, alpha=1.0,
                          trunc_terms=n, tail_mode="none")
        values.append(phi_tilde_norm(ctrl, 1.0, spec).value)
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_phi_tilde_errors():
    spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.0, alpha=1.0)
    with pytest.raises(DivergentSeriesError):
        phi_tilde_norm(ControlFunction.power(1.0, 2.0), 1.0, spec)
    with pytest.raises(DivergentSeriesError):  # ratio exactly 1
        phi_tilde_norm(ControlFunction.power(1.0, 1.0), 1.0, spec)
    with pytest.raises(SingularPointError):
        phi_tilde_norm(ControlFunction.power(1.0, -0.5), 0.0, spec)
    bad = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=1.0, alpha=1.0)
    with pytest.raises(InadmissibleError):
        phi_tilde_norm(ControlFunction.power(1.0, 0.5), 1.0, bad)


def test_phi_tilde_tabulated_coverage_stops():
    ctrl = ControlFunction.tabulated(edges=[0.1, 1.0, 8.0], values=[1.0, 1.0])
    spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.0, alpha=1.0,
                      trunc_terms=64)
    pt = phi_tilde_norm(ctrl, 1.0, spec)
    # queries at 2^i are covered for i <= 3 (2^3 = 8), then the sum stops
    assert pt.coverage_truncated
    assert pt.terms == 4
    assert pt.tail is None
    assert pt.value == pytest.approx(sum(2.0 ** -(i + 1) * 0.5 * 2.0 for i in range(4)), rel=1e-12)


def test_phi_tilde_measured_full_extension(scalar_model):
    env = measure_envelope(scalar_model, RhoParams("A", 0, 0, 1.0),
                           SamplePlan(seed=3, count=400, radius=2.0,
                                      exclude_origin_below=0.1))
    ctrl = ControlFunction.measured(env)
    spec = SeriesSpec(scheme=forward(2.0), family="A", rho2_abs=0.0, alpha=1.0)
    pt = phi_tilde_norm(ctrl, 1.0, spec)
    assert not pt.coverage_truncated
    assert pt.terms == 64
    assert pt.value == pytest.approx(1.0, rel=1e-9)


# --- closed-form constants ---------------------------------------------------


def test_corollary_constants():
    assert corollary_constant("c24", 1.0, 0.5, 0.0) == pytest.approx(1.7071067811865475, rel=1e-12)
    assert corollary_constant("c24", 0.0, 0.5, 0.3) == 0.0
    assert corollary_constant("c26", 1.0, 2.0, 0.0) == pytest.approx(8.0 / 6.0, rel=1e-12)
    assert corollary_constant("c34", 1.0, 0.5, 0.0, beta=1.0) == pytest.approx(
        3.414213562373095, rel=1e-12)
    assert corollary_constant("c36", 1.0, 0.5, 0.0, beta=-1.5) == pytest.approx(
        2.0 / (0.5 ** 0.5 - 0.5), rel=1e-12)


def test_corollary_out_of_regime():
    with pytest.raises(OutOfRegimeError, match="r < 1"):
        corollary_constant("c24", 1.0, 1.0, 0.0)
    with pytest.raises(OutOfRegimeError, match="r > 0"):
        corollary_constant("c26", 1.0, 0.0, 0.0)
    with pytest.raises(OutOfRegimeError, match="rho2"):
        corollary_constant("c24", 1.0, 0.5, 1.0)
    # printed r-range of the forward general-scale constant is unattainable:
    # for |1+beta| > 1 the denominator needs r < 1
    with pytest.raises(OutOfRegimeError):
        corollary_constant("c34", 1.0, 2.0, 0.0, beta=1.0)
    with pytest.raises(OutOfRegimeError):
        corollary_constant("c36", 1.0, 2.0, 0.0, beta=-1.5)
    with pytest.raises(ValueError):
        corollary_constant("c99", 1.0, 0.5, 0.0)


# --- convergence predicate ---------------------------------------------------


def test_convergence_predicate():
    v = convergence_predicate(forward(2.0), 0.5)
    assert v and v.ratio == pytest.approx(2.0 ** -0.5)
    assert not convergence_predicate(forward(2.0), 1.0)  # boundary diverges
    v2 = convergence_predicate(forward(2.0), 2.0)
    assert not v2 and v2.ratio == 2.0
    assert convergence_predicate(backward(2.0), 2.0)
    assert not convergence_predicate(backward(2.0), 0.5)
    assert convergence_predicate(backward(-0.5), 0.5)  # contracting backward, r < 1
    assert not convergence_predicate(backward(-0.5), 2.0)


# --- audit -------------------------------------------------------------------


def test_constant_tag():
    assert constant_tag("A", "forward") == "c24"
    assert constant_tag("A", "backward") == "c26"
    assert constant_tag("B", "forward") == "c34"
    assert constant_tag("B", "backward") == "c36"
    with pytest.raises(FamilyError):
        constant_tag("A", "sideways")


def test_audit_exact_additive():
    f = make_additive(dim=2, seed=8)
    params = RhoParams("A", 0.2, 0.3, 1.0)
    pts = draw_samples(f.space, SamplePlan(seed=5, count=30, radius=2.0,
                                           exclude_origin_below=0.1), arity=1)
    out = audit(f, params, forward(2.0), ControlFunction.power(1.0, 0.5), pts)
    assert out.which == "c24"
    assert out.empirical_sup <= 1e-10
    assert out.verdicts["empirical_le_derived"] is True
    assert out.verdicts["empirical_le_paper"] is True
    assert out.verdicts["derived_matches_paper"] == "consistent"


def test_audit_c24_regime_consistent():
    f = make_power(dim=2, theta=0.1, r=0.5, seed=14)
    params = RhoParams("A", 0.0, 0.5, 1.0)
    pts = draw_samples(f.space, SamplePlan(seed=6, count=30, radius=2.0,
                                           exclude_origin_below=0.1), arity=1)
    out = audit(f, params, forward(2.0), ControlFunction.power(1.0, 0.5), pts)
    assert out.paper_constant == pytest.approx(4.552284749830793, rel=1e-9)
    assert out.derived_constant == pytest.approx(4.552284749830793, rel=1e-9)
    assert out.verdicts["derived_matches_paper"] == "consistent"
    assert out.empirical_sup <= out.derived_constant


def test_audit_c26_regime_mismatched():
    f = make_power(dim=2, theta=0.1, r=2.0, seed=15)
    params = RhoParams("A", 0.0, 0.0, 1.0)
    pts = draw_samples(f.space, SamplePlan(seed=7, count=30, radius=2.0,
                                           exclude_origin_below=0.1), arity=1)
    out = audit(f, params, backward(2.0), ControlFunction.power(1.0, 2.0), pts)
    assert out.which == "c26"
    assert out.paper_constant == pytest.approx(8.0 / 6.0, abs=1e-6)
    assert out.derived_constant == pytest.approx(0.5, abs=1e-6)
    assert out.verdicts["derived_matches_paper"] == "mismatched"
    assert out.empirical_sup <= 0.5 + 1e-6
    assert out.verdicts["empirical_le_derived"] is True


def test_audit_divergent_constant():
    f = make_power(dim=1, theta=0.1, r=0.5, seed=16)
    params = RhoParams("A", 0.0, 0.0, 1.0)
    pts = draw_samples(f.space, SamplePlan(seed=8, count=5, radius=2.0,
                                           exclude_origin_below=0.1), arity=1)
    # backward scheme on a sublinear perturbation: series diverges, approximant
    # still converges pointwise is false here, so audit must fail loudly or
    # report the divergent constants; r=0.5 backward diverges in approximate
    out_err = None
    try:
        audit(f, params, backward(2.0), ControlFunction.power(1.0, 0.5), pts)
    except Exception as e:  # noqa: BLE001 - asserting the class below
        out_err = e
    from jensenlab.errors import NotConvergedError

    assert isinstance(out_err, NotConvergedError)


def test_audit_requires_power_control():
    f = make_additive(dim=1, seed=1)
    with pytest.raises(ValueError):
        audit(f, RhoParams("A", 0, 0, 1.0), forward(2.0), ControlFunction.zero(), [])
