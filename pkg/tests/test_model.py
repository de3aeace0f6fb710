import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaudin.errors import DuplicateEpsilon, LengthMismatch, ZeroCoupling
from gaudin.model import (Axis, BasisOccupation, charge_eigenvalues,
                          hamiltonian_energy, load_model, new_model,
                          pair_sums, save_model)
from gaudin.solver import LambdaState, transform_axis


def test_new_model_valid():
    m = new_model([0.0, 1.0], 0.5)
    assert m.num_spins == 2
    assert m.omega == 2


def test_new_model_duplicate_levels():
    with pytest.raises(DuplicateEpsilon):
        new_model([0.0, 0.0], 0.5)


def test_new_model_zero_coupling():
    with pytest.raises(ZeroCoupling):
        new_model([1.0], 0.0)


def test_model_immutable():
    m = new_model([0.0, 1.0], 0.5)
    with pytest.raises(ValueError):
        m.epsilons[0] = 3.0


def test_charge_eigenvalues_single_spin_vacuum():
    g = 0.7
    m = new_model([0.3], g)
    lam = LambdaState(np.array([0.0]), Axis.LAMBDA, 0, g)
    assert charge_eigenvalues(m, lam).r == pytest.approx([1.0 / g])


def test_charge_eigenvalues_single_spin_up():
    g = 0.7
    m = new_model([0.3], g)
    lam = LambdaState(np.array([2.0 / g]), Axis.LAMBDA, 1, g)
    assert charge_eigenvalues(m, lam).r == pytest.approx([-1.0 / g])


def test_charge_eigenvalues_match_ed(model4, solved4):
    from gaudin.ed import spectrum_by_sector

    spec = spectrum_by_sector(model4)
    for m_exc, pairs in solved4.states.items():
        ed_rows = spec.r_by_sector[m_exc]
        used = set()
        for _occ, state in pairs:
            r = charge_eigenvalues(model4, state).r
            dists = np.abs(ed_rows - r).max(axis=1)
            j = int(np.argmin(dists))
            assert dists[j] < 1e-8
            assert j not in used
            used.add(j)


def test_charge_trace_rule(model4, solved4):
    n, g = model4.num_spins, model4.g
    for m_exc, pairs in solved4.states.items():
        for _occ, state in pairs:
            r = charge_eigenvalues(model4, state).r
            defect = abs(r.sum() + (2.0 / g) * (m_exc - n / 2.0))
            assert defect < 1e-9 * max(1.0, np.abs(r).max())


def test_charge_axis_equality(model4, solved4):
    for _m_exc, pairs in solved4.states.items():
        for _occ, state in pairs:
            r_lam = charge_eigenvalues(model4, state).r
            r_mu = charge_eigenvalues(model4, transform_axis(model4, state)).r
            scale = max(1.0, np.abs(r_lam).max())
            assert np.abs(r_lam - r_mu).max() < 1e-12 * scale


def test_hamiltonian_energy_projection():
    r = charge_eigenvalues(new_model([0.3], 0.7),
                           LambdaState(np.array([0.0]), Axis.LAMBDA, 0, 0.7))
    assert hamiltonian_energy([1.0], r) == pytest.approx(r.r[0])
    assert hamiltonian_energy([0.0], r) == 0.0


def test_hamiltonian_energy_length_mismatch():
    r = charge_eigenvalues(new_model([0.3], 0.7),
                           LambdaState(np.array([0.0]), Axis.LAMBDA, 0, 0.7))
    with pytest.raises(LengthMismatch):
        hamiltonian_energy([1.0, 2.0], r)


def test_central_spin_energies_match_ed():
    # H = B Sz_0 + sum_i A_i S_0.S_i equals (1/2) R_0 under the field map
    from gaudin.ed import central_spin_hamiltonian, spectrum_by_sector

    field_b, couplings = 1.3, np.array([1.0, 0.55, 0.37])
    m = new_model(np.concatenate(([0.0], -1.0 / couplings)), -1.0 / field_b)
    eta = np.zeros(4)
    eta[0] = 0.5

    hmat = central_spin_hamiltonian(field_b, couplings)
    ed_evals = np.sort(np.linalg.eigvalsh(hmat))

    from gaudin.solver import solve_all_sectors
    solved = solve_all_sectors(m)
    energies = sorted(
        hamiltonian_energy(eta, charge_eigenvalues(m, state))
        for _m_exc, pairs in solved.states.items() for _occ, state in pairs)
    assert np.abs(np.array(energies) - ed_evals).max() < 1e-8


def test_pair_sums_antisymmetry():
    eps = np.array([0.2, 0.9, 1.4, 2.2, 3.0])
    assert pair_sums(eps).sum() == pytest.approx(0.0, abs=1e-12)


@given(st.lists(st.integers(min_value=0, max_value=30), min_size=0, max_size=8,
                unique=True))
def test_occupation_roundtrip(sites):
    occ = BasisOccupation(tuple(sorted(sites)))
    assert len(occ) == len(sites)
    comp = occ.complement(31)
    assert set(occ.up_sites) | set(comp.up_sites) == set(range(31))


def test_occupation_rejects_disorder():
    with pytest.raises(ValueError):
        BasisOccupation((2, 1))
    with pytest.raises(ValueError):
        BasisOccupation((1, 1))
    with pytest.raises(ValueError):
        BasisOccupation((0, 5)).validate(3)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-5, max_value=5, allow_nan=False).filter(
    lambda g: abs(g) > 1e-3))
def test_model_json_roundtrip(tmp_path_factory, g):
    path = tmp_path_factory.mktemp("model") / "m.json"
    m = new_model([0.0, 0.4, 1.1], g)
    save_model(m, path)
    m2 = load_model(path)
    assert np.array_equal(m2.epsilons, m.epsilons)
    assert m2.g == m.g


def test_model_json_rejects_nonfinite(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"epsilons": [0.0, NaN], "g": 0.5}')
    with pytest.raises(ValueError):
        load_model(path)
    path.write_text('{"epsilons": [0.0, 1.0], "g": Infinity}')
    with pytest.raises(ValueError):
        load_model(path)
