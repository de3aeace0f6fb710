import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaudin import ed
from gaudin.determinants import (det, izergin_overlap, norm_product,
                                 normalized_expectation,
                                 partition_overlap_det,
                                 partition_overlap_det_rapidity,
                                 partition_overlap_perm, scalar_product_det,
                                 splus_form_factor, sz_form_factor)
from gaudin.errors import (AxisMismatch, CoincidingRapidities, NonFinite,
                           RapiditiesRequired, SiteOutOfRange, TooLarge,
                           ZeroOverlap)
from gaudin.model import Axis, BasisOccupation, new_model
from gaudin.rapidities import RapiditySet, extract_rapidities
from gaudin.solver import LambdaState, transform_axis


def cofactor_det(m):
    """Independent oracle: Laplace expansion along the first row."""
    n = m.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return m[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(m[1:], j, axis=1)
        total += (-1) ** j * m[0, j] * cofactor_det(minor)
    return total


def lambda_at(eps_sub, raps):
    return np.sum(1.0 / (np.asarray(eps_sub)[:, None] - raps[None, :]), axis=1)


# -- det ----------------------------------------------------------------


def test_det_empty():
    assert det(np.zeros((0, 0))) == 1.0


def test_det_identity():
    assert det(np.eye(3)) == pytest.approx(1.0)


def test_det_vs_cofactor(rng):
    m = rng.normal(size=(6, 6))
    assert det(m) == pytest.approx(cofactor_det(m), rel=1e-12)
    mc = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert det(mc) == pytest.approx(cofactor_det(mc), rel=1e-12)


def test_det_nonfinite():
    bad = np.array([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(NonFinite):
        det(bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(0, 2 ** 31 - 1))
def test_det_multiplicative_property(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    b = rng.normal(size=(n, n))
    scale = max(1.0, abs(det(a)) * abs(det(b)))
    assert abs(det(a @ b) - det(a) * det(b)) < 1e-10 * scale


# -- domain-wall partition functions ---------------------------------------


def test_overlap_single_excitation(model4):
    # the 1x1 determinant must equal the bare projection 1/(lambda - eps)
    lam1 = 0.9 + 0.7j
    occ = BasisOccupation((2,))
    val = partition_overlap_det(model4, occ, lambda_at([model4.epsilons[2]],
                                                       np.array([lam1])))
    assert val == pytest.approx(1.0 / (lam1 - model4.epsilons[2]))


def test_overlap_empty(model4):
    assert partition_overlap_det(model4, BasisOccupation(()), []) == 1.0
    rap0 = RapiditySet(np.zeros(0), Axis.LAMBDA)
    assert partition_overlap_perm(model4, BasisOccupation(()), rap0) == 1.0
    assert izergin_overlap(model4, BasisOccupation(()), rap0) == 1.0


def test_perm_two_excitation_frozen():
    # eps_occ=[0,1], lambda=[2,3i]: 1/((2-0)(3i-1)) + 1/((2-1)(3i-0))
    # = -1/20 - (29/60) i, by direct two-term expansion
    m = new_model([0.0, 1.0], 0.5)
    rap = RapiditySet(np.array([2.0, 3.0j]), Axis.LAMBDA)
    val = partition_overlap_perm(m, BasisOccupation((0, 1)), rap)
    assert val == pytest.approx(complex(-1.0 / 20.0, -29.0 / 60.0))


def test_perm_symmetric_under_rapidity_exchange(rng, model4):
    occ = BasisOccupation((0, 1, 3))
    raps = rng.normal(size=3) + 1j * rng.normal(size=3)
    base = partition_overlap_perm(model4, occ, RapiditySet(raps, Axis.LAMBDA))
    for perm in ([1, 0, 2], [2, 1, 0], [1, 2, 0]):
        val = partition_overlap_perm(model4, occ,
                                     RapiditySet(raps[perm], Axis.LAMBDA))
        assert val == pytest.approx(base, rel=1e-12)


def test_perm_size_cap():
    m = new_model(np.arange(10.0), 1.0)
    rap = RapiditySet(np.arange(10) + 0.5j, Axis.LAMBDA)
    with pytest.raises(TooLarge):
        partition_overlap_perm(m, BasisOccupation(tuple(range(10))), rap)


def test_triple_agreement_random(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        m_exc = int(rng.integers(1, min(n, 6) + 1))
        eps = np.sort(rng.uniform(0, 1, size=n))
        if np.diff(eps).min() < 1e-3:
            continue
        model = new_model(eps, 1.0)
        occ = BasisOccupation(tuple(sorted(rng.choice(n, m_exc, replace=False))))
        raps = rng.uniform(-0.5, 1.5, m_exc) + 1j * rng.uniform(0.2, 2.0, m_exc)
        rap = RapiditySet(raps, Axis.LAMBDA)
        a = partition_overlap_det(model, occ,
                                  lambda_at(eps[list(occ.up_sites)], raps))
        b = partition_overlap_perm(model, occ, rap)
        c = izergin_overlap(model, occ, rap)
        d = partition_overlap_det_rapidity(model, occ, rap)
        scale = max(abs(a), abs(b), abs(c))
        assert abs(a - b) < 1e-9 * scale
        assert abs(a - c) < 1e-9 * scale
        assert abs(a - d) < 1e-10 * scale


def test_izergin_single_reduces(model4):
    lam1 = -0.3 + 1.1j
    occ = BasisOccupation((1,))
    val = izergin_overlap(model4, occ,
                          RapiditySet(np.array([lam1]), Axis.LAMBDA))
    assert val == pytest.approx(1.0 / (lam1 - model4.epsilons[1]))


def test_izergin_degenerates_where_det_does_not(model4):
    lam1 = 0.4 + 0.9j
    raps = np.array([lam1, lam1])
    occ = BasisOccupation((0, 2))
    with pytest.raises(CoincidingRapidities):
        izergin_overlap(model4, occ, RapiditySet(raps, Axis.LAMBDA))
    merged = partition_overlap_det(
        model4, occ, lambda_at(model4.epsilons[list(occ.up_sites)], raps))
    assert np.isfinite(merged)


def test_recursion_residue(rng, model6):
    # residue of Det J at lambda_M -> eps_{i_j} equals the overlap with
    # that level removed; symmetric two-point estimate kills the O(delta)
    # regular part
    eps = model6.epsilons
    occ_sites = (0, 2, 3, 5)
    occ = BasisOccupation(occ_sites)
    raps_rest = rng.uniform(0, 1.6, 3) + 1j * rng.uniform(0.3, 1.5, 3)
    j_target = 2  # pole at eps_{i_3} = eps[3]
    pole = eps[occ_sites[j_target]]
    delta = 1e-6 * model6.span

    def overlap_at(lam_m):
        raps = np.concatenate([raps_rest, [lam_m]])
        return partition_overlap_det(model6, occ,
                                     lambda_at(eps[list(occ_sites)], raps))

    residue = delta * (overlap_at(pole + delta) - overlap_at(pole - delta)) / 2.0
    reduced_occ = BasisOccupation(tuple(s for s in occ_sites
                                        if s != occ_sites[j_target]))
    reduced = partition_overlap_det(
        model6, reduced_occ,
        lambda_at(eps[list(reduced_occ.up_sites)], raps_rest))
    assert abs(residue - reduced) < 1e-5 * abs(reduced)


def test_overlap_vs_ed_bethe_vector(rng, model4):
    occ = BasisOccupation((1, 3))
    raps = rng.normal(size=2) + 1j * rng.normal(size=2)
    rap = RapiditySet(raps, Axis.LAMBDA)
    val = partition_overlap_det(model4, occ,
                                lambda_at(model4.epsilons[[1, 3]], raps))
    vec = ed.build_bethe_vector(model4, rap)
    ed_val = ed.bilinear(ed.basis_state(4, occ.up_sites), vec)
    assert val == pytest.approx(ed_val, rel=1e-12)


# -- scalar products -----------------------------------------------------------


def test_scalar_product_single_spin_closed_form():
    g = 0.5
    m = new_model([0.0], g)
    bra = LambdaState(np.zeros(1), Axis.MU, 1, g)       # mu-vacuum <up|
    ket = LambdaState(np.array([2.0 / g]), Axis.LAMBDA, 1, g)
    assert scalar_product_det(m, bra, ket) == pytest.approx(-2.0 / g)


def test_scalar_product_orthogonality(model6, solved6):
    pairs = solved6.states[2]
    states = [s for _o, s in pairs]
    mus = [transform_axis(model6, s) for s in states]
    norms = [norm_product(model6, s, mu) for s, mu in zip(states, mus)]
    for i in range(len(states)):
        for j in range(len(states)):
            val = scalar_product_det(model6, mus[i], states[j])
            if i != j:
                scale = np.sqrt(abs(norms[i] * norms[j]))
                assert abs(val) < 1e-8 * scale


def test_scalar_product_sector_mismatch_flag(model4, solved4):
    _occ1, st1 = solved4.states[1][0]
    _occ2, st2 = solved4.states[2][0]
    mu1 = transform_axis(model4, st1)
    val, mismatch = scalar_product_det(model4, mu1, st2, with_flag=True)
    assert mismatch and val == 0.0


def test_scalar_product_eigenstate_form(model4, solved4):
    # two lambda-axis states: the +2/g diagonal shift equals the mixed form
    _occ1, st1 = solved4.states[2][0]
    _occ2, st2 = solved4.states[2][3]
    mixed = scalar_product_det(model4, transform_axis(model4, st1), st2)
    shortcut = scalar_product_det(model4, st1, st2)
    assert shortcut == pytest.approx(mixed, rel=1e-12, abs=1e-12)


def test_scalar_product_arbitrary_states_vs_ed(rng, model4):
    # neither side solves the Bethe equations: 2 + 2 arbitrary rapidities
    mu_raps = rng.normal(size=2) + 1j * rng.normal(size=2)
    lam_raps = rng.normal(size=2) + 1j * rng.normal(size=2)
    mu_vals = lambda_at(model4.epsilons, mu_raps)
    lam_vals = lambda_at(model4.epsilons, lam_raps)
    val = scalar_product_det(model4, mu_vals, lam_vals)
    vec = ed.build_bethe_vector(
        model4, RapiditySet(np.concatenate([mu_raps, lam_raps]), Axis.LAMBDA))
    ed_val = ed.bilinear(ed.basis_state(4, range(4)), vec)
    assert val == pytest.approx(ed_val, rel=1e-9)


# -- norm products -------------------------------------------------------------


def test_norm_product_single_spin():
    g = 0.5
    m = new_model([0.0], g)
    lam_up = LambdaState(np.array([2.0 / g]), Axis.LAMBDA, 1, g)
    mu_up = LambdaState(np.array([0.0]), Axis.MU, 1, g)
    assert norm_product(m, lam_up, mu_up) == pytest.approx(-2.0 / g)
    # ED: <up| B(eps - g/2) |down> with B = S+/(u - eps)
    rap = RapiditySet(np.array([-g / 2.0]), Axis.LAMBDA)
    vec = ed.build_bethe_vector(m, rap)
    assert ed.bilinear(ed.basis_state(1, (0,)), vec) == pytest.approx(-2.0 / g)

    lam_vac = LambdaState(np.zeros(1), Axis.LAMBDA, 0, g)
    mu_vac = LambdaState(np.array([-2.0 / g]), Axis.MU, 0, g)
    assert norm_product(m, lam_vac, mu_vac) == pytest.approx(2.0 / g)


def test_norm_product_vs_ed(model6, solved6):
    for _occ, state in solved6.states[2][:4]:
        mu = transform_axis(model6, state)
        gram = norm_product(model6, state, mu)
        v_lam = ed.build_bethe_vector(model6, extract_rapidities(model6, state))
        v_mu = ed.build_bethe_vector(model6, extract_rapidities(model6, mu))
        ed_val = ed.bilinear(v_mu, v_lam)
        assert gram == pytest.approx(ed_val.real, rel=1e-9)
        assert abs(ed_val.imag) < 1e-9 * abs(gram)


def test_norm_product_axis_check(model4, solved4):
    _occ, state = solved4.states[1][0]
    with pytest.raises(AxisMismatch):
        norm_product(model4, state, state)
    other_mu = transform_axis(model4, solved4.states[1][1][1])
    with pytest.raises(AxisMismatch):
        norm_product(model4, state, other_mu)


# -- form factors ---------------------------------------------------------------


def test_splus_single_spin():
    g = 0.5
    m = new_model([0.0], g)
    bra = LambdaState(np.zeros(1), Axis.MU, 1, g)   # <up|
    ket = LambdaState(np.zeros(1), Axis.LAMBDA, 0, g)  # vacuum
    assert splus_form_factor(m, 0, bra, ket) == 1.0


def test_splus_vs_ed_all_sites(model4, solved4):
    ops = ed.build_spin_ops(4)
    for (_on, st_n), (_om, st_m) in zip(solved4.states[2][:3],
                                        solved4.states[1][:3]):
        mu_n = transform_axis(model4, st_n)
        v_mu = ed.build_bethe_vector(model4, extract_rapidities(model4, mu_n))
        v_lam = ed.build_bethe_vector(model4, extract_rapidities(model4, st_m))
        for site in range(4):
            ff = splus_form_factor(model4, site, mu_n, st_m)
            ff_ed = ed.bilinear(v_mu, ops["sp"][site] @ v_lam)
            assert ff == pytest.approx(ff_ed.real, rel=1e-9)


def test_splus_sector_rule(model4, solved4):
    _o1, st1 = solved4.states[2][0]
    _o2, st2 = solved4.states[2][1]
    val, mismatch = splus_form_factor(model4, 0, transform_axis(model4, st1),
                                      st2, with_flag=True)
    assert mismatch and val == 0.0


def test_splus_site_range(model4, solved4):
    _o, st1 = solved4.states[1][0]
    with pytest.raises(SiteOutOfRange):
        splus_form_factor(model4, 4, transform_axis(model4, st1), st1)


def test_sz_single_spin_sign():
    # <up| S^z B(lambda) |down> = (1/2)/(lambda - eps); this matrix
    # element pins the sign of the cross-term coefficient
    g, eps0 = 0.7, 0.3
    m = new_model([eps0], g)
    bra = LambdaState(np.zeros(1), Axis.MU, 1, g)
    lam1 = eps0 - g / 2.0
    rap = RapiditySet(np.array([lam1], dtype=complex), Axis.LAMBDA)
    val = sz_form_factor(m, 0, bra, rap)
    assert val == pytest.approx(0.5 / (lam1 - eps0))
    # the opposite sign choice would give -(3/2)/(lambda - eps)
    assert val != pytest.approx(-1.5 / (lam1 - eps0))


def test_sz_two_spin_vs_ed(rng):
    # build-time validation of the cross-term sign at N=2
    m = new_model([0.0, 1.0], 0.45)
    from gaudin.solver import solve_all_sectors
    solved = solve_all_sectors(m)
    ops = ed.build_spin_ops(2)
    for _on, st_n in solved.states[1]:
        for _om, st_m in solved.states[1]:
            mu_n = transform_axis(m, st_n)
            raps_m = extract_rapidities(m, st_m)
            v_mu = ed.build_bethe_vector(m, extract_rapidities(m, mu_n))
            v_lam = ed.build_bethe_vector(m, raps_m)
            for site in range(2):
                ff = sz_form_factor(m, site, mu_n, raps_m, st_m.values)
                ff_ed = ed.bilinear(v_mu, ops["sz"][site] @ v_lam)
                assert ff == pytest.approx(ff_ed.real, rel=1e-9)


def test_sz_vacuum_term_only(model4, solved4):
    _o, vac = solved4.states[0][0]
    mu_bra = transform_axis(model4, vac)
    rap0 = RapiditySet(np.zeros(0), Axis.LAMBDA)
    val = sz_form_factor(model4, 1, mu_bra, rap0, vac.values)
    overlap = scalar_product_det(model4, mu_bra, vac)
    assert val == pytest.approx(-0.5 * overlap)


def test_sz_requires_rapidities(model4, solved4):
    _o, st1 = solved4.states[1][0]
    with pytest.raises(RapiditiesRequired):
        sz_form_factor(model4, 0, transform_axis(model4, st1), st1)


def test_sz_vs_ed(model4, solved4):
    ops = ed.build_spin_ops(4)
    for (_on, st_n), (_om, st_m) in zip(solved4.states[2][:4],
                                        solved4.states[2][2:]):
        mu_n = transform_axis(model4, st_n)
        raps_m = extract_rapidities(model4, st_m)
        v_mu = ed.build_bethe_vector(model4, extract_rapidities(model4, mu_n))
        v_lam = ed.build_bethe_vector(model4, raps_m)
        for site in range(4):
            ff = sz_form_factor(model4, site, mu_n, raps_m, st_m.values)
            ff_ed = ed.bilinear(v_mu, ops["sz"][site] @ v_lam)
            assert ff == pytest.approx(ff_ed.real, rel=1e-9)


# -- normalized expectations -----------------------------------------------------


def test_expectation_vacuum(model4, solved4):
    _o, vac = solved4.states[0][0]
    mu = transform_axis(model4, vac)
    for i in range(4):
        assert normalized_expectation(model4, "sz", i, vac, mu) == \
            pytest.approx(-0.5)


def test_expectation_full_sector(model4, solved4):
    _o, top = solved4.states[4][0]
    mu = transform_axis(model4, top)
    for i in range(4):
        assert normalized_expectation(model4, "sz", i, top, mu) == \
            pytest.approx(0.5)


def test_expectation_vs_ed(model6, solved6):
    spec = ed.spectrum_by_sector(model6)
    from gaudin.model import charge_eigenvalues
    sz_ops = [ed.site_operator(6, i, np.diag([-0.5, 0.5])) for i in range(6)]
    for _occ, state in solved6.states[3][:5]:
        mu = transform_axis(model6, state)
        r = charge_eigenvalues(model6, state).r
        dists = np.abs(spec.r_by_sector[3] - r).max(axis=1)
        vec = spec.vectors_by_sector[3][:, int(np.argmin(dists))]
        for i in range(6):
            mine = normalized_expectation(model6, "sz", i, state, mu)
            theirs = float(vec @ sz_ops[i] @ vec)
            assert abs(mine - theirs) < 1e-9


def test_expectation_raising_is_zero(model4, solved4):
    _o, state = solved4.states[2][0]
    mu = transform_axis(model4, state)
    assert normalized_expectation(model4, "sp", 1, state, mu) == 0.0
    assert normalized_expectation(model4, "sm", 1, state, mu) == 0.0


def test_expectation_zero_overlap(model4, solved4):
    _o1, st1 = solved4.states[2][0]
    _o2, st2 = solved4.states[2][1]
    mu2 = transform_axis(model4, st2)
    with pytest.raises(ZeroOverlap):
        normalized_expectation(model4, "sz", 0, st1, mu2)


def test_expectation_bounds(model6, solved6):
    for _occ, state in solved6.states[2][:6]:
        mu = transform_axis(model6, state)
        for i in range(6):
            val = normalized_expectation(model6, "sz", i, state, mu)
            assert -0.5 - 1e-9 <= val <= 0.5 + 1e-9


# -- eigenbasis resolution ---------------------------------------------------------


def test_eigenbasis_resolution(model6, solved6):
    # sum over one full sector of |<occ|n><n|occ>| / (N_mu N_lambda)
    # reproduces <occ|occ> = 1
    occ = BasisOccupation((1, 4))
    occ_idx = list(occ.up_sites)
    comp = occ.complement(6)
    comp_idx = list(comp.up_sites)
    total = 0.0
    for _o, state in solved6.states[2]:
        mu = transform_axis(model6, state)
        left = partition_overlap_det(model6, occ, state.values[occ_idx])
        right = partition_overlap_det(model6, comp, mu.values[comp_idx])
        total += left * right / norm_product(model6, state, mu)
    assert total == pytest.approx(1.0, abs=1e-8)
