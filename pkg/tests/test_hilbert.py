import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from cavion.hilbert import (
    E,
    FIELD_HEADROOM,
    G,
    R,
    FockCutoffs,
    Preparation,
    SystemParams,
    TruncationError,
    build_carrier_hamiltonian,
    build_cos_position,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    build_ladder,
    free_energies,
    motion_number_operator,
    population,
    prepare_initial_state,
)
from cavion.specfun import coupling_f


def idx(m, n, s, cutoffs):
    return (m * cutoffs.n_max + n) * 3 + s


SMALL = FockCutoffs(8, 6)
PARAMS = SystemParams(nu=10.0, omega_c=4.0, delta=2.0, g1=0.7, g2=0.4, eta=0.3)


def test_level_energies_resonance_and_detuning():
    p = SystemParams(omega_c=1000.0, delta=20.0)
    assert p.E_e - p.E_g == 2 * p.omega_c
    assert p.E_e - p.E_r - p.omega_c == pytest.approx(p.delta)


@pytest.mark.parametrize("kwargs", [dict(nu=0), dict(omega_c=-1), dict(g1=-0.1), dict(eta=-0.2),
                                    dict(eta=math.nan)])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        SystemParams(**kwargs)


def test_g_eff_and_time_conversion():
    p = SystemParams(delta=20.0, g1=2.0, g2=1.0)
    assert p.g_eff == 0.1
    assert p.r == 2.0
    assert np.allclose(p.time_from_tau([0.0, 1.0]), [0.0, 10.0])
    with pytest.raises(ValueError):
        SystemParams(delta=0.0).g_eff
    off = SystemParams(g1=0.0, g2=0.0)
    assert np.all(off.time_from_tau([0.5, 2.0]) == [0.5, 2.0])


def test_cutoff_validation():
    with pytest.raises(ValueError):
        FockCutoffs(0, 5)
    with pytest.raises(ValueError):
        FockCutoffs(5, 2)
    assert FockCutoffs(10, 4).dim == 120
    assert FockCutoffs(10, 4).trusted_motion_levels == 6


def test_ladder_commutator_corner():
    a = build_ladder(7)
    comm = a @ a.T - a.T @ a
    expected = np.eye(7)
    expected[-1, -1] = 1 - 7
    assert np.allclose(comm, expected, atol=1e-14)


def test_cos_position_identity_at_zero_eta():
    assert np.array_equal(build_cos_position(0.0, FockCutoffs(6, 3)), np.eye(6))


@pytest.mark.parametrize("eta", [0.1, 0.5, 1.0])
def test_cos_position_against_matrix_exponential(eta):
    # independent route: (exp(i eta X) + exp(-i eta X)) / 2 by Pade on the padded space
    cut = FockCutoffs(20, 3)
    dim = cut.m_max + cut.pad
    a = build_ladder(dim)
    x = a + a.T
    ref = 0.5 * (scipy.linalg.expm(1j * eta * x) + scipy.linalg.expm(-1j * eta * x)).real
    c = build_cos_position(eta, cut)
    n = cut.trusted_motion_levels
    assert np.max(np.abs(c[:n, :n] - ref[:n, :n])) < 1e-10


@pytest.mark.parametrize("eta", [0.1, 0.3, 0.7])
def test_cos_position_diagonal_and_parity(eta):
    cut = FockCutoffs(30, 3)
    c = build_cos_position(eta, cut)
    assert np.allclose(c, c.T, atol=0)
    for m in range(cut.trusted_motion_levels):
        assert abs(c[m, m] - coupling_f(m, eta)) < 1e-12
    # cos is even in X, so odd-distance elements vanish
    assert abs(c[0, 1]) < 1e-14
    assert np.max(np.abs(c[::2, 1::2])) < 1e-12


def test_full_hamiltonian_matrix_elements():
    h = build_full_hamiltonian(PARAMS, SMALL)
    c = build_cos_position(PARAMS.eta, SMALL)
    m, mp, n = 2, 4, 3
    # g1 (s_gr b^dag): |m', n+1, g> <- |m, n, r>
    assert h[idx(mp, n + 1, G, SMALL), idx(m, n, R, SMALL)] == pytest.approx(
        PARAMS.g1 * math.sqrt(n + 1) * c[mp, m], abs=1e-14)
    assert h[idx(mp, n + 1, R, SMALL), idx(m, n, E, SMALL)] == pytest.approx(
        PARAMS.g2 * math.sqrt(n + 1) * c[mp, m], abs=1e-14)
    # no direct g-e coupling, no field-conserving ion flips
    assert h[idx(m, n, G, SMALL), idx(m, n, E, SMALL)] == 0
    assert h[idx(m, n, G, SMALL), idx(m, n, R, SMALL)] == 0
    assert h[idx(m, n, E, SMALL), idx(m, n, E, SMALL)] == pytest.approx(
        PARAMS.nu * m + PARAMS.omega_c * n + PARAMS.omega_c)


@pytest.mark.parametrize("builder", [build_full_hamiltonian, build_carrier_hamiltonian,
                                     build_effective_hamiltonian])
def test_hamiltonians_hermitian(builder):
    h = builder(PARAMS, SMALL)
    assert h.shape == (SMALL.dim, SMALL.dim)
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12


def test_carrier_conserves_motion_number():
    h = build_carrier_hamiltonian(PARAMS, SMALL)
    num = motion_number_operator(SMALL)
    assert np.max(np.abs(h @ num - num @ h)) == 0.0


def test_full_equals_carrier_at_zero_eta():
    p = SystemParams(nu=10.0, omega_c=4.0, delta=2.0, g1=0.7, g2=0.4, eta=0.0)
    assert np.max(np.abs(build_full_hamiltonian(p, SMALL) - build_carrier_hamiltonian(p, SMALL))) < 1e-14


def test_effective_hamiltonian_elements():
    h = build_effective_hamiltonian(PARAMS, SMALL)
    ge = PARAMS.g1 * PARAMS.g2 / PARAMS.delta
    for m in (0, 3):
        f2 = coupling_f(m, PARAMS.eta) ** 2
        for n in (2, 5):
            # <m, n-2, e| H |m, n, g> = g_eff f^2 sqrt(n (n-1))
            assert h[idx(m, n - 2, E, SMALL), idx(m, n, G, SMALL)] == pytest.approx(
                ge * f2 * math.sqrt(n * (n - 1)), abs=1e-14)
        n = 3
        stark_e = PARAMS.g2 ** 2 / PARAMS.delta * f2 * (1 + n)
        stark_g = PARAMS.g1 ** 2 / PARAMS.delta * f2 * n
        assert h[idx(m, n, E, SMALL), idx(m, n, E, SMALL)] == pytest.approx(
            PARAMS.nu * m + PARAMS.omega_c * n + PARAMS.omega_c + stark_e, abs=1e-12)
        assert h[idx(m, n, G, SMALL), idx(m, n, G, SMALL)] == pytest.approx(
            PARAMS.nu * m + PARAMS.omega_c * n - PARAMS.omega_c + stark_g, abs=1e-12)


def test_effective_level_r_decoupled():
    h = build_effective_hamiltonian(PARAMS, SMALL)
    r_rows = np.arange(R, SMALL.dim, 3)
    off = h[r_rows].copy()
    off[np.arange(r_rows.size), r_rows] = 0.0
    assert np.max(np.abs(off)) == 0.0


def test_effective_reduces_to_bare_tpjcm_at_zero_eta():
    p = SystemParams(nu=10.0, omega_c=4.0, delta=2.0, g1=1.0, g2=1.0, eta=0.0)
    h = build_effective_hamiltonian(p, SMALL)
    for m in range(SMALL.m_max):
        assert h[idx(m, 0, E, SMALL), idx(m, 2, G, SMALL)] == pytest.approx(math.sqrt(2) / 2.0)


def test_effective_needs_detuning():
    with pytest.raises(ValueError):
        build_effective_hamiltonian(SystemParams(delta=0.0), SMALL)


def test_free_energies_layout():
    e = free_energies(PARAMS, SMALL)
    assert e[idx(2, 1, R, SMALL)] == pytest.approx(2 * PARAMS.nu + PARAMS.omega_c - PARAMS.delta)


def test_prepare_fock_state():
    cut = FockCutoffs(5, 6)
    st_ = prepare_initial_state(Preparation(fock_m=2, fock_p=1), cut)
    assert st_.amplitudes.shape == cut.shape
    assert st_.amplitudes[2, 1, E] == 1.0
    assert st_.leakage == 0.0
    assert population(st_, "e") == 1.0 and population(st_, G) == 0.0


def test_prepare_reserves_field_headroom():
    cut = FockCutoffs(5, 6)
    with pytest.raises(TruncationError):
        prepare_initial_state(Preparation(fock_m=0, fock_p=cut.n_max - FIELD_HEADROOM), cut)
    # an ion in g needs no headroom
    prepare_initial_state(Preparation(level="g", fock_m=0, fock_p=cut.n_max - 1), cut)


def test_prepare_coherent_leakage():
    prep = Preparation(alpha=2.0, fock_p=0)
    with pytest.raises(TruncationError):
        prepare_initial_state(prep, FockCutoffs(10, 4), eps=1e-10)
    st_ = prepare_initial_state(prep, FockCutoffs(24, 4), eps=1e-10)
    assert 0 < st_.leakage < 1e-10
    assert st_.norm2 == pytest.approx(1.0, abs=1e-14)
    motion = np.abs(st_.amplitudes[:, 0, E]) ** 2
    assert motion[4] == pytest.approx(math.exp(-4) * 256 / 24, rel=1e-9)


def test_preparation_validation():
    with pytest.raises(ValueError):
        Preparation(alpha=1.0, fock_m=1, fock_p=0)
    with pytest.raises(ValueError):
        Preparation(alpha=1.0)
    with pytest.raises(ValueError):
        Preparation(level="r", fock_m=0, fock_p=0)
    with pytest.raises(ValueError):
        Preparation(fock_m=-1, fock_p=0)


@given(st.floats(0.0, 1.5), st.floats(0.0, 1.5), st.sampled_from(["g", "e"]))
@settings(max_examples=30, deadline=None)
def test_populations_sum_to_one(alpha, beta, level):
    st_ = prepare_initial_state(Preparation(level=level, alpha=alpha, beta=beta), FockCutoffs(20, 22))
    total = sum(population(st_, s) for s in "gre")
    assert total == pytest.approx(1.0, abs=1e-13)
