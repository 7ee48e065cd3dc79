import numpy as np
import pytest

from src.errors import ConfigurationError, NotReducible, ParityError
from src.grassmann import Supernumber
from src.superspace import SuperPolynomial
from src.symalg import (
    NONSTANDARD_IDS,
    STANDARD_IDS,
    annihilates,
    check_invariants,
    decompose,
    flow_transform,
    kdv_bracket_table,
    kdv_generators,
    kdv_nonstandard_cases,
    monomial_basis,
    planar_qx_px_reduction,
    s5_transformed_equation_demo,
    semidirect_check,
    standard_generators,
    subalgebra,
    superbracket,
    verify_jacobi,
    verify_supercommutators,
)

from .conftest import GENERATORS

x = SuperPolynomial.variable("x", GENERATORS)
t = SuperPolynomial.variable("t", GENERATORS)
th1 = SuperPolynomial.variable("theta1", GENERATORS)
th2 = SuperPolynomial.variable("theta2", GENERATORS)
ONE = SuperPolynomial.constant(1.0, GENERATORS)
GEN = standard_generators(GENERATORS)


def poly(value):
    return SuperPolynomial.constant(value, GENERATORS)


def test_generator_coefficients():
    assert GEN["L"].coeff("x") == x * -2.0
    assert GEN["Qx"].coeff("x") == -th1
    assert GEN["Qx"].coeff("theta1") == ONE
    assert GEN["Pt"].coeff("t") == ONE
    assert all(GEN["Pt"].coeff(v).is_zero() for v in ("x", "theta1", "theta2", "phi"))


def test_kdv_generator_coefficients():
    kdv = kdv_generators(GENERATORS)
    assert kdv["A1"].coeff("x") == th1
    assert kdv["A1"].coeff("theta1") == -ONE
    assert kdv["C3"].coeff("t") == t * 3.0
    assert kdv["C3"].coeff("phi") == -SuperPolynomial.variable("phi", GENERATORS)
    assert kdv["C2"].coeff("t") == ONE and kdv["C2"].coeff("x").is_zero()


def test_bracket_examples():
    assert superbracket(GEN["L"], GEN["Px"]).allclose(2.0 * GEN["Px"])
    assert superbracket(GEN["Qx"], GEN["Qx"]).allclose(-2.0 * GEN["Px"])
    kdv = kdv_generators(GENERATORS)
    assert superbracket(kdv["A1"], kdv["A1"]).allclose(-2.0 * kdv["C1"])
    coords, residual = decompose(superbracket(GEN["Qt"], GEN["Qt"]), GEN)
    assert coords["Pt"] == pytest.approx(2.0) and residual < 1e-12


def test_supercommutator_table():
    report = verify_supercommutators(GENERATORS)
    assert report.passed
    assert len(report.cells) == 25
    assert report.cell("L", "Qt").computed == "-Qt"
    assert report.cell("Px", "Pt").computed == "0"
    assert report.cell("Qt", "Qt").computed == "2Pt"
    assert report.to_dict()["Qx,Qx"]["expected"] == "-2Px"


def test_sentinel_flags_qt_qt():
    report = verify_supercommutators(GENERATORS, sentinel=True)
    assert not report.passed
    assert ("Qt", "Qt") in [c.pair for c in report.failures]
    assert report.cell("Qt", "Qt").computed == "-2Pt"


def test_kdv_fixture():
    report = kdv_bracket_table(GENERATORS)
    assert report.passed
    assert report.cell("A1", "A1").computed == "-2C1"


def test_jacobi_and_ideal():
    assert verify_jacobi(GEN)[0]
    assert verify_jacobi(kdv_generators(GENERATORS))[0]
    assert semidirect_check(GENERATORS)[0]


def test_subalgebra_invariants_examples(mu):
    s4 = subalgebra("S4", -1, generators=GENERATORS)
    assert s4.sigma.allclose(x + t)
    assert s4.tau1 == th1 and s4.tau2 == th2

    s8 = subalgebra("S8", 1, mu=mu, generators=GENERATORS)
    M = poly(mu)
    assert s8.sigma.allclose(x - t + M * t * th1)
    assert s8.tau1.allclose(th1 - M * t)

    s5 = subalgebra("S5", mu=mu, generators=GENERATORS)
    assert s5.nonstandard
    assert s5.sample_invariant.allclose(M * x * th1)


def test_subalgebra_parameter_checks(mu):
    with pytest.raises(ConfigurationError):
        subalgebra("S17")
    with pytest.raises(ConfigurationError):
        subalgebra("S4", 2)
    with pytest.raises(ParityError):
        subalgebra("S6", mu=Supernumber.scalar(1.0, GENERATORS))
    with pytest.raises(ParityError):
        subalgebra("S10", nu=mu * mu + Supernumber.scalar(2.0, GENERATORS))


def test_annihilates_examples(mu, nu):
    for eps in (1, -1):
        ok, _ = annihilates(GEN["Px"] + float(eps) * GEN["Pt"], x - t * float(eps))
        assert ok
    ok, _ = annihilates(mu * GEN["Qx"], poly(mu) * x * th1)
    assert ok
    kdv = kdv_generators(GENERATORS)
    field_ = mu * kdv["A1"] + nu * kdv["A2"]
    f = x * t * th1 + th2 * x ** 2 + ONE
    ok, _ = annihilates(field_, poly(mu * nu) * f)
    assert ok
    ok, residual = annihilates(GEN["Px"], x)
    assert not ok and residual == ONE


@pytest.mark.parametrize("sid", STANDARD_IDS + NONSTANDARD_IDS)
@pytest.mark.parametrize("eps", [1, -1])
def test_all_sixteen_classes_annihilate_their_invariants(sid, eps, mu, nu):
    rep = subalgebra(sid, eps, mu, nu, GENERATORS)
    checks = check_invariants(rep)
    assert checks
    failed = [(c.invariant, c.residual) for c in checks if not c.passed]
    assert not failed


@pytest.mark.parametrize("sid", STANDARD_IDS + NONSTANDARD_IDS)
@pytest.mark.parametrize("eps", [1, -1])
def test_invariants_hold_for_combined_odd_constants(sid, eps):
    xi = [Supernumber.generator(i, GENERATORS) for i in (1, 2, 3, 4)]
    mu, nu = xi[0] + 0.3 * xi[2], xi[1] - 0.5 * xi[3]
    checks = check_invariants(subalgebra(sid, eps, mu, nu, GENERATORS))
    failed = [(c.invariant, c.residual) for c in checks if not c.passed]
    assert not failed


def test_monomial_basis_respects_free_arguments():
    basis = monomial_basis(("t", "theta2", "phi"), degree=2, generators=GENERATORS)
    assert all(not p.depends_on("x") and not p.depends_on("theta1") for p in basis)
    # 3 powers of t, 2 theta masks, 2 powers of Phi
    assert len(basis) == 12
    travelling = monomial_basis(("x-et", "theta1"), epsilon=-1, degree=1, generators=GENERATORS)
    assert travelling[2].allclose(x + t)


def test_s5_demo_is_not_reducible(mu):
    demo = s5_transformed_equation_demo(mu, GENERATORS)
    assert demo.annihilated
    assert demo.explicit_x_dependence
    assert not demo.reducible
    with pytest.raises(NotReducible):
        demo.require_reducible()
    assert demo.to_dict()["reducible"] is False


def test_planar_reduction_leaves_null_solution():
    planar = planar_qx_px_reduction(GENERATORS)
    assert planar.closed and planar.annihilated and planar.null_only


def test_kdv_nonstandard_cases(mu, nu):
    cases = kdv_nonstandard_cases(mu, nu, GENERATORS)
    assert [c.id for c in cases] == ["muA1", "muA1+nuA2", "C1-muA1-nuA2"]
    for rep in cases:
        assert all(c.passed for c in check_invariants(rep)), rep.id
    assert set(cases[0].invariants) == {"t", "theta2", "phi"}


def test_flow_examples(kappa):
    assert flow_transform("Px", 0.5, GENERATORS).apply(x) == x + 0.5
    qx = flow_transform("Qx", kappa, GENERATORS)
    K = poly(kappa)
    assert qx.apply(x).allclose(x - K * th1)
    assert qx.apply(th1).allclose(th1 + K)
    dil = flow_transform("L", 0.3, GENERATORS)
    assert dil.apply(x).allclose(x * float(np.exp(-0.6)))
    assert dil.apply(th2).allclose(th2 * float(np.exp(0.3)))
    p = x * th1 + t * th2
    assert qx.inverse().apply(qx.apply(p)).allclose(p)
    with pytest.raises(ParityError):
        flow_transform("Qt", 0.2, GENERATORS)
    with pytest.raises(ConfigurationError):
        flow_transform("C1", 0.2, GENERATORS)


def test_flows_preserve_invariants():
    # x - eps t is unchanged by the flow of Px + eps Pt, i.e. by Px then Pt
    s4 = subalgebra("S4", 1, generators=GENERATORS)
    moved = flow_transform("Pt", 0.7, GENERATORS).apply(flow_transform("Px", 0.7, GENERATORS).apply(s4.sigma))
    assert moved.allclose(s4.sigma)
