import math

import numpy as np
import pandas as pd
import pytest
from scipy import special as sp_special
from scipy.integrate import solve_ivp

from src.config import RunConfig, parse_window
from src.errors import (ConfigurationError, ConstraintError, DomainError, NotReducible,
                        ParityError)
from src.fieldcalc import residual_on_grid, shg_components
from src.grassmann import Parity, Supernumber, get_algebra, random_supernumber
from src.reduction import (
    SLOT_NAMES,
    AnalyticSlot,
    ReducedSolution,
    SlotValues,
    ansatz_expansion,
    ansatz_superfield,
    certify,
    energy,
    expected_residual,
    implicit_relation_residual,
    mirror_s8_to_s12,
    null_solution,
    reconstruct,
    reduced_equation_residuals,
    reduced_residuals,
    reduced_sign_map,
    s4_constraint_residual,
    s8_constraint_residual,
    solve_run,
    solve_S1,
    solve_S4,
    solve_S4_sol4,
    solve_S8_S12,
    split_bilinear,
)
from src.symalg import STANDARD_IDS, flow_transform, subalgebra

from .conftest import GENERATORS

ALG = get_algebra(GENERATORS)
XI = [Supernumber.generator(i, GENERATORS) for i in (1, 2, 3, 4)]
XI12, XI34 = XI[0] * XI[1], XI[2] * XI[3]
WINDOW = parse_window("-1:1:-1:1:21")
GRID = "-3:3:601"
WIDE_GRID = "-5:5:2001"
WIDE_WINDOW = parse_window("-2:2:-2:2:101")


def scalar(value):
    return Supernumber.scalar(value, GENERATORS)


def mask_of(element):
    return int(np.flatnonzero(element.coeffs)[0])


def analytic_slots(rng):
    def slot(parity, body=None):
        constant = random_supernumber(rng, parity, scale=0.3, body=body)
        wave = random_supernumber(rng, parity, scale=0.3, body=0.2 if body is not None else None)
        return AnalyticSlot.of(constant, [(wave, 1.3, 0.4)])

    return {"alpha": slot(Parity.EVEN, 0.1), "eta": slot(Parity.ODD),
            "lambda": slot(Parity.ODD), "beta": slot(Parity.EVEN, -0.2)}


@pytest.fixture(scope="module")
def s4_bosonic():
    return solve_S4(1, None, 1.6, scalar(0.3), WIDE_GRID)


@pytest.fixture(scope="module")
def s4_nilpotent():
    return solve_S4(1, 0.5 * XI34, None, scalar(0.3), GRID, dalpha0=scalar(0.0))


def test_sign_maps():
    assert reduced_sign_map("S4") == (-1, 1, -1, 1)
    assert reduced_sign_map("S1") == (-1, 1, 1, -1)
    with pytest.raises(NotReducible):
        reduced_sign_map("S5")
    with pytest.raises(ConfigurationError):
        reduced_sign_map("S99")


@pytest.mark.parametrize("sid", STANDARD_IDS)
@pytest.mark.parametrize("eps", [1, -1])
def test_ansatz_residual_is_the_signed_reduced_system(rng, sid, eps, mu, nu):
    # the full residual of any ansatz equals the reduced equations carried through the invariants
    rep = subalgebra(sid, eps, mu, nu, GENERATORS)
    slots = analytic_slots(rng)
    x = np.linspace(-0.6, 0.7, 4)
    t = np.linspace(0.3, 0.9, 4)
    full = shg_components(ansatz_superfield(rep, slots), x, t)
    carried = expected_residual(rep, slots, x, t)
    assert (full - carried).max_abs() < 1e-8


def test_s2_reduces_to_the_null_solution():
    # alpha = c, beta = -sinh c leaves -sinh c cosh c in the last equation
    zeros = np.zeros((1, ALG.dim))
    for c in (0.4, -1.1, 0.0):
        v = SlotValues(ALG.scalar(np.array([c])), zeros, zeros, zeros, zeros, zeros, zeros,
                       ALG.scalar(np.array([-math.sinh(c)])))
        rows = reduced_equation_residuals("S2", v, np.array([0.0]))
        assert np.max(np.abs(rows[0])) < 1e-15
        assert rows[3][0, 0] == pytest.approx(-math.sinh(c) * math.cosh(c), abs=1e-15)


def random_slot_values(rng, body=0.4):
    even = [random_supernumber(rng, Parity.EVEN, scale=0.5).coeffs[None] for _ in range(3)]
    odd = [random_supernumber(rng, Parity.ODD, scale=0.5).coeffs[None] for _ in range(4)]
    alpha = random_supernumber(rng, Parity.EVEN, scale=0.5, body=body).coeffs[None]
    return SlotValues(alpha, even[0], even[1], odd[0], odd[1], odd[2], odd[3], even[2])


@pytest.mark.parametrize("sid", ["S2", "S3", "S6", "S7", "S10", "S11"])
@pytest.mark.parametrize("eps", [1, -1])
def test_reduced_equations_vanish_only_on_solutions(rng, sid, eps, mu, nu):
    sigma = np.array([0.7])
    for _ in range(5):
        rows = reduced_equation_residuals(sid, random_slot_values(rng), sigma, eps, mu, nu)
        assert max(np.max(np.abs(row)) for row in rows) > 1e-3
    zeros = np.zeros((1, ALG.dim))
    rows = reduced_equation_residuals(sid, SlotValues(*[zeros] * 8), sigma, eps, mu, nu)
    assert all(np.max(np.abs(row)) == 0.0 for row in rows)


def test_s4_bosonic_wave(s4_bosonic):
    r = s4_bosonic
    _, drift = energy(r)
    assert drift < 1e-8
    assert reduced_residuals(r, 1e-8).passed
    report = certify(r, WIDE_WINDOW, 1e-6)
    assert report.passed, report.max_abs
    check = implicit_relation_residual(r)
    assert check.segments
    assert check.passed(1e-6), check.to_dict()


def test_s4_nilpotent_c0(s4_nilpotent):
    r = s4_nilpotent
    assert r.c0.allclose(0.5 * XI34)
    assert np.max(np.abs(s4_constraint_residual(r))) < 1e-8
    assert r.value("eta")[:, mask_of(XI[2])].any()
    assert reduced_residuals(r, 1e-8).passed
    assert certify(r, WINDOW, 1e-6).passed


def test_s4_soul_solves_the_variational_equation():
    # alpha = a0 + a xi3 xi4 with C0 = c xi3 xi4: a'' = -(cosh(2 a0) a + c sinh(a0))
    c = 0.5
    r = solve_S4(1, c * XI34, None, scalar(0.3), "-5:5:1001", dalpha0=scalar(0.0))

    def rhs(_, y):
        a0, da0, a, da = y
        return [da0, -math.sinh(a0) * math.cosh(a0), da, -(math.cosh(2 * a0) * a + c * math.sinh(a0))]

    ref = solve_ivp(rhs, (r.sigma[0], r.sigma[-1]), [0.3, 0.0, 0.0, 0.0], method="DOP853",
                    t_eval=r.sigma, rtol=1e-12, atol=1e-14)
    assert ref.success
    alpha = r.value("alpha")
    np.testing.assert_allclose(alpha[:, 0], ref.y[0], rtol=0, atol=1e-8)
    soul = alpha[:, mask_of(XI34)]
    assert np.max(np.abs(soul - ref.y[2])) < 1e-6 * np.max(np.abs(ref.y[2]))


def test_s4_initial_data_checks():
    with pytest.raises(DomainError):
        solve_S4(1, None, 0.5, scalar(0.3), GRID)
    with pytest.raises(ConstraintError):
        solve_S4(1, 2.0 * XI12, None, scalar(0.3), GRID, eta0=XI[0], lambda0=XI[1])
    with pytest.raises(ConfigurationError):
        solve_S4(1, XI12 + XI34, None, scalar(0.3), GRID)
    with pytest.raises(ParityError):
        solve_S4(1, None, None, XI[0], GRID)


def test_split_bilinear():
    eta, lam = split_bilinear(0.5 * XI34)
    assert (eta * lam).allclose(0.5 * XI34)
    assert eta.parity is Parity.ODD and lam.parity is Parity.ODD
    zero_eta, zero_lam = split_bilinear(scalar(0.0))
    assert zero_eta.is_zero() and zero_lam.is_zero()


def test_s4_zero_c0_branch(kappa):
    r = solve_S4_sol4(1, kappa, scalar(0.3), GRID, c1=1.6)
    assert "f" in r.aux and r.meta["solver"] == "S4-sol4"
    assert np.max(np.abs(s4_constraint_residual(r))) < 1e-12
    assert certify(r, WINDOW, 1e-6).passed


def test_s8_and_s12_mirror(mu):
    r8 = solve_S8_S12("S8", 1, mu, scalar(0.3), GRID, dalpha0=scalar(0.2), df0=0.5)
    mirrored = mirror_s8_to_s12(r8)
    direct = solve_S8_S12("S12", 1, mu, scalar(0.3), GRID, dalpha0=scalar(0.2), df0=-0.5)
    for name in SLOT_NAMES:
        np.testing.assert_allclose(mirrored.slots[name], direct.slots[name], atol=1e-8)
    assert mirrored.nu.allclose(mu)
    assert np.max(np.abs(s8_constraint_residual(r8))) < 1e-12
    assert certify(r8, WINDOW, 1e-6).passed
    assert certify(mirrored, WINDOW, 1e-6).passed
    with pytest.raises(ConfigurationError):
        s8_constraint_residual(mirrored)


def test_s8_mirror_with_negative_epsilon(mu):
    # alpha starts on the decaying branch of the saddle at alpha = 0
    r8 = solve_S8_S12("S8", -1, mu, scalar(0.01), GRID, dalpha0=scalar(-0.01), df0=0.5)
    r12 = mirror_s8_to_s12(r8)
    np.testing.assert_allclose(r12.sigma, -r8.sigma[::-1])
    assert reduced_residuals(r12, 1e-8).passed
    assert certify(r12, WINDOW, 1e-6).passed


def test_s1_soul_follows_modified_bessel_functions():
    # about alpha = 0 the soul obeys s a'' + a' - a = 0: I0(2 sqrt s) and K0(2 sqrt s)
    grid = np.linspace(0.5, 4.5, 801)
    r0 = 2 * math.sqrt(grid[0])
    alpha0 = float(sp_special.i0(r0)) * XI12 + float(sp_special.k0(r0)) * XI34
    dalpha0 = (float(sp_special.i1(r0)) * XI12 - float(sp_special.k1(r0)) * XI34) * (1.0 / math.sqrt(grid[0]))
    r = solve_S1(alpha0, dalpha0, grid)
    alpha = r.value("alpha")
    arg = 2 * np.sqrt(grid)
    np.testing.assert_allclose(alpha[:, mask_of(XI12)], sp_special.i0(arg), rtol=1e-7)
    np.testing.assert_allclose(alpha[:, mask_of(XI34)], sp_special.k0(arg), rtol=1e-6)
    assert np.all(alpha[:, 0] == 0.0)


def test_s1_with_nilpotent_c0():
    r = solve_S1(scalar(0.05), scalar(0.02), "0.5:4.5:2001", c0=0.25 * XI34)
    assert np.max(np.abs(s4_constraint_residual(r))) < 1e-8
    assert reduced_residuals(r, 1e-8).passed
    assert certify(r, parse_window("0.5:1.5:1:3:21"), 1e-6).passed


def test_s1_needs_positive_sigma_and_time():
    with pytest.raises(DomainError):
        solve_S1(scalar(0.2), scalar(0.1), "-1:1:11")
    r = solve_S1(scalar(0.2), scalar(0.1), "0.5:4.5:201")
    with pytest.raises(DomainError):
        ansatz_expansion(r.rep(), r.interpolants(), np.array([1.0]), np.array([-0.5]))


def test_corrupted_beta_fails_certification(s4_bosonic):
    beta = s4_bosonic.slots["beta"].copy()
    beta[:, 0, 0] += 0.1
    corrupted = s4_bosonic.with_slot("beta", beta)
    assert not reduced_residuals(corrupted, 1e-8).passed
    report = certify(corrupted, WINDOW, 1e-6)
    assert not report.passed
    assert report.max_abs > 0.05


def test_finite_difference_step_reaches_the_superfield(s4_bosonic):
    phi = reconstruct(s4_bosonic, fd_step=1e-4)
    assert {c.fd_step for c in phi.components} == {1e-4}
    moved = phi.pullback(flow_transform("Px", 0.3, GENERATORS))
    assert {c.fd_step for c in moved.components} == {1e-4}
    assert certify(s4_bosonic, WINDOW, 1e-6, fd_step=1e-4).passed


def test_symmetry_flows_map_solutions_to_solutions(s4_bosonic):
    phi = reconstruct(s4_bosonic)
    for name, param in (("Px", 0.3), ("Pt", -0.4), ("L", 0.1)):
        moved = phi.pullback(flow_transform(name, param, GENERATORS))
        assert residual_on_grid(moved, WINDOW, tolerance=1e-6).passed, name


def test_supersymmetry_flows_map_solutions_to_solutions(s4_bosonic):
    phi = reconstruct(s4_bosonic)
    for name in ("Qx", "Qt"):
        moved = phi.pullback(flow_transform(name, XI[2], GENERATORS))
        report = residual_on_grid(moved, WINDOW, tolerance=1e-6)
        assert report.passed, (name, report.max_abs)
        assert np.any(moved.evaluate(0.2, 0.1).c[1])


def test_null_solutions(mu):
    r = null_solution("S6", "-5:5:201", mu=mu)
    assert reduced_residuals(r, 1e-12).max_abs == 0.0
    assert certify(r, WINDOW, 1e-12).passed
    with pytest.raises(NotReducible):
        null_solution("S13", "-5:5:201")


def test_solution_validation():
    sigma = np.linspace(0.0, 1.0, 5)
    good = {name: np.zeros((5, 3, ALG.dim)) for name in SLOT_NAMES}
    with pytest.raises(ConfigurationError):
        ReducedSolution("S4", 1, sigma, {**good, "beta": np.zeros((4, 3, ALG.dim))})
    odd_alpha = np.zeros((5, 3, ALG.dim))
    odd_alpha[:, 0, mask_of(XI[0])] = 1.0
    with pytest.raises(ParityError):
        ReducedSolution("S4", 1, sigma, {**good, "alpha": odd_alpha})
    with pytest.raises(ConfigurationError):
        ReducedSolution("S4", 1, sigma[::-1], good)
    with pytest.raises(NotReducible):
        ReducedSolution("S9", 1, sigma, good)


def test_solution_files(tmp_path, s4_nilpotent):
    path = s4_nilpotent.save_json(tmp_path / "sol.json")
    loaded = ReducedSolution.load_json(path)
    np.testing.assert_array_equal(loaded.sigma, s4_nilpotent.sigma)
    for name in SLOT_NAMES:
        np.testing.assert_allclose(loaded.slots[name], s4_nilpotent.slots[name])
    assert loaded.c0.allclose(s4_nilpotent.c0)
    assert loaded.meta["solver"] == "S4"

    frame = pd.read_csv(s4_nilpotent.save_csv(tmp_path / "sol.csv"))
    assert list(frame.columns[:3]) == ["sigma", "alpha_m0", "alpha_m1"]
    assert len(frame.columns) == 1 + 4 * ALG.dim
    assert len(frame) == len(s4_nilpotent.sigma)

    (tmp_path / "bad.json").write_text('{"subalgebra": "S4"}')
    with pytest.raises(ConfigurationError):
        ReducedSolution.load_json(tmp_path / "bad.json")


def test_solve_run_dispatch():
    run = RunConfig(subalgebra="S8", mu=[[1, 1.0]], ic={"alpha": 0.3, "dalpha": 0.2, "df": 0.5},
                    grid=GRID)
    r = solve_run(run)
    assert r.subalgebra == "S8" and r.mu.allclose(XI[0])
    with pytest.raises(NotReducible):
        solve_run(RunConfig(subalgebra="S6", grid=GRID))
    with pytest.raises(NotReducible):
        solve_run(RunConfig(subalgebra="S5", grid=GRID))
