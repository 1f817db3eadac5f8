"""Truncated Fock-space algebra for motion x field x three-level ion.

Composite basis ordering is ``|m, n, s>`` with the electronic index ``s``
running fastest in the order (g, r, e).  Operators are dense ``numpy`` arrays;
the flat index of ``|m, n, s>`` is ``(m * n_max + n) * 3 + s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.stats import poisson

from .specfun import coherent_weights, coupling_profile

G, R, E = 0, 1, 2
LEVELS = {"g": G, "r": R, "e": E}
FIELD_HEADROOM = 2
EDGE_MARGIN = 5
DEFAULT_EPS = 1e-10


class TruncationError(ValueError):
    """The Fock cutoffs discard more probability than allowed."""


@dataclass(frozen=True)
class SystemParams:
    """Frequencies and couplings, all in units of a common rate (hbar = 1).

    Level energies are fixed by two-photon resonance ``E_e - E_g = 2 omega_c``
    and by the intermediate detuning ``delta = E_e - E_r - omega_c``, with
    ``E_e = -E_g = omega_c``.
    """

    nu: float = 400.0
    omega_c: float = 1000.0
    delta: float = 20.0
    g1: float = 1.0
    g2: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be > 0, got {self.nu!r}")
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c!r}")
        if self.g1 < 0 or self.g2 < 0:
            raise ValueError("couplings g1, g2 must be >= 0")
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise ValueError(f"eta must be finite and >= 0, got {self.eta!r}")

    @property
    def E_g(self):
        return -self.omega_c

    @property
    def E_e(self):
        return self.omega_c

    @property
    def E_r(self):
        return -self.delta

    @property
    def level_energies(self):
        return np.array([self.E_g, self.E_r, self.E_e])

    @property
    def g_eff(self):
        """Two-photon coupling ``g1 g2 / delta``."""
        if self.delta == 0:
            raise ValueError("delta = 0: the effective two-photon coupling is singular")
        return self.g1 * self.g2 / self.delta

    @property
    def r(self):
        """Coupling ratio ``g1 / g2``."""
        if self.g2 == 0:
            raise ValueError("g2 = 0: coupling ratio undefined")
        return self.g1 / self.g2

    def time_from_tau(self, tau):
        """Convert dimensionless ``tau = g_eff * t`` to physical time.

        With both couplings off there is no dynamics and ``t = tau`` is used.
        """
        tau = np.asarray(tau, dtype=float)
        g = self.g_eff
        return tau / g if g != 0 else tau.copy()


@dataclass(frozen=True)
class FockCutoffs:
    """Truncation dimensions; ``pad`` extra motion levels are used for matrix functions."""

    m_max: int
    n_max: int
    pad: int = 20

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        if self.n_max < 3:
            raise ValueError(f"n_max must be >= 3 for two-photon headroom, got {self.n_max}")
        if self.pad < 0:
            raise ValueError(f"pad must be >= 0, got {self.pad}")

    @property
    def dim(self):
        return self.m_max * self.n_max * 3

    @property
    def shape(self):
        return (self.m_max, self.n_max, 3)

    @property
    def trusted_motion_levels(self):
        """Motion levels ``0 .. m_max - EDGE_MARGIN`` are trusted; the rest sit near the edge."""
        return max(self.m_max - EDGE_MARGIN + 1, 0)


@dataclass(frozen=True)
class Preparation:
    """Initial product state ``|level> x |motion> x |field>``.

    Motion is either coherent (``alpha``) or Fock (``fock_m``); the field is
    either Fock (``fock_p``) or coherent (``beta``).
    """

    level: str = "e"
    alpha: complex | None = None
    fock_m: int | None = None
    beta: complex | None = None
    fock_p: int | None = None

    def __post_init__(self):
        if self.level not in ("g", "e"):
            raise ValueError(f"level must be 'g' or 'e', got {self.level!r}")
        if (self.alpha is None) == (self.fock_m is None):
            raise ValueError("give exactly one of alpha, fock_m")
        if (self.beta is None) == (self.fock_p is None):
            raise ValueError("give exactly one of beta, fock_p")
        for name in ("fock_m", "fock_p"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 0):
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")

    @property
    def n_coherent(self):
        return (self.alpha is not None) + (self.beta is not None)


@dataclass(frozen=True)
class CompositeState:
    amplitudes: np.ndarray
    time_tau: float = 0.0
    leakage: float = 0.0

    @property
    def vector(self):
        return self.amplitudes.reshape(-1)

    @property
    def norm2(self):
        return float(np.vdot(self.vector, self.vector).real)

    def with_vector(self, vec, time_tau):
        return CompositeState(np.asarray(vec).reshape(self.amplitudes.shape), time_tau, self.leakage)


# --- single-mode operators -------------------------------------------------

def build_ladder(dim):
    """Annihilation operator on a ``dim``-level truncated Fock space."""
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def build_cos_position(eta, cutoffs):
    """``cos(eta (a^dag + a))`` on the motion space, via the spectrum of ``a^dag + a``.

    The quadrature is diagonalised on ``m_max + pad`` levels and the result is
    cut back to ``m_max``; rows within ``EDGE_MARGIN`` of the padded boundary
    are inaccurate, so keep ``pad >= EDGE_MARGIN`` (default 20).
    """
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta!r}")
    dim = cutoffs.m_max + cutoffs.pad
    if eta == 0 or dim == 1:
        return np.eye(cutoffs.m_max)
    off = np.sqrt(np.arange(1, dim, dtype=float))
    w, v = scipy.linalg.eigh_tridiagonal(np.zeros(dim), off)
    c = (v * np.cos(eta * w)) @ v.T
    c = 0.5 * (c + c.T)
    return c[: cutoffs.m_max, : cutoffs.m_max]


def _sigma(i, j):
    s = np.zeros((3, 3))
    s[i, j] = 1.0
    return s


def _check_hermitian(h):
    dev = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if dev > 1e-12:
        raise AssertionError(f"Hamiltonian not Hermitian, max |H - H^dag| = {dev:.3e}")
    return h


def free_energies(params, cutoffs):
    """Diagonal of ``nu a^dag a + omega_c b^dag b + sum_i E_i sigma_ii``."""
    m = np.arange(cutoffs.m_max, dtype=float)[:, None, None]
    n = np.arange(cutoffs.n_max, dtype=float)[None, :, None]
    levels = params.level_energies[None, None, :]
    return (params.nu * m + params.omega_c * n + levels).reshape(-1)


def _ion_field_coupling(params, cutoffs):
    """``g1 (s_gr b^dag + s_rg b) + g2 (s_re b^dag + s_er b)`` on field x ion."""
    b = build_ladder(cutoffs.n_max)
    bd = b.T
    coup = params.g1 * (np.kron(bd, _sigma(G, R)) + np.kron(b, _sigma(R, G)))
    coup += params.g2 * (np.kron(bd, _sigma(R, E)) + np.kron(b, _sigma(E, R)))
    return coup


def full_interaction(params, cutoffs):
    """Interaction part of the full Hamiltonian (ion-field coupling times ``cos eta X``)."""
    return np.kron(build_cos_position(params.eta, cutoffs), _ion_field_coupling(params, cutoffs))


def build_full_hamiltonian(params, cutoffs):
    """Full Hamiltonian with the ``cos eta (a^dag + a)`` motional nonlinearity."""
    h = full_interaction(params, cutoffs)
    h[np.diag_indices_from(h)] += free_energies(params, cutoffs)
    return _check_hermitian(h)


def build_carrier_hamiltonian(params, cutoffs):
    """Carrier Hamiltonian: the cosine replaced by its diagonal ``f(a^dag a)``."""
    f = np.diag(coupling_profile(params.eta, cutoffs.m_max - 1).values)
    h = np.kron(f, _ion_field_coupling(params, cutoffs))
    h[np.diag_indices_from(h)] += free_energies(params, cutoffs)
    return _check_hermitian(h)


def build_effective_hamiltonian(params, cutoffs):
    """Effective two-photon Hamiltonian after eliminating level r.

    ``H0 = nu a^dag a + omega_c b^dag b + omega_c (s_ee - s_gg)``, Stark shifts
    ``(g2^2/delta) f^2 (1 + b^dag b) s_ee + (g1^2/delta) f^2 b^dag b s_gg`` and
    coupling ``(g1 g2/delta) f^2 (s_eg b^2 + s_ge b^dag^2)``.  Level r stays in
    the layout with zero rows and columns apart from its free motion/field energy.
    """
    if params.delta == 0:
        raise ValueError("delta = 0: effective Hamiltonian is singular")
    mm, nn = cutoffs.m_max, cutoffs.n_max
    f2 = np.diag(coupling_profile(params.eta, mm - 1).values ** 2)
    b = build_ladder(nn)
    num_b = np.diag(np.arange(nn, dtype=float))
    ident_b = np.eye(nn)

    field_ion = np.kron(num_b, np.eye(3)) * params.omega_c
    field_ion += np.kron(ident_b, params.omega_c * (_sigma(E, E) - _sigma(G, G)))
    h0 = np.kron(np.diag(params.nu * np.arange(mm, dtype=float)), np.eye(3 * nn))
    h0 += np.kron(np.eye(mm), field_ion)

    stark = (params.g2 ** 2 / params.delta) * np.kron(ident_b + num_b, _sigma(E, E))
    stark += (params.g1 ** 2 / params.delta) * np.kron(num_b, _sigma(G, G))
    b2 = b @ b
    inter = (params.g1 * params.g2 / params.delta) * (
        np.kron(b2, _sigma(E, G)) + np.kron(b2.T, _sigma(G, E)))
    h = h0 + np.kron(f2, stark + inter)
    return _check_hermitian(h)


def motion_number_operator(cutoffs):
    return np.kron(np.diag(np.arange(cutoffs.m_max, dtype=float)), np.eye(3 * cutoffs.n_max))


# --- states ------------------------------------------------------------------

def _mode_amplitudes(amp, fock, support, size):
    """Amplitudes on ``size`` levels, nonzero only below ``support``; returns (vec, leakage)."""
    vec = np.zeros(size, dtype=complex)
    if fock is not None:
        if fock >= support:
            raise TruncationError(f"Fock level {fock} outside the truncated support ({support} levels)")
        vec[fock] = 1.0
        return vec, 0.0
    vec[:support] = coherent_weights(amp, support)
    # survival function keeps precision below 1e-16, unlike 1 - sum
    leakage = float(poisson.sf(support - 1, abs(complex(amp)) ** 2))
    return vec, leakage


def field_support(level, n_max):
    """Number of field levels that may be populated initially.

    An excited ion emits two photons, so the top ``FIELD_HEADROOM`` levels are
    kept free for the ground-state partner ``|n + 2, g>``.
    """
    return n_max - FIELD_HEADROOM if level == "e" else n_max


def initial_mode_vectors(prep, cutoffs):
    """Unnormalised motion and field amplitude vectors plus per-mode leakage."""
    motion, leak_m = _mode_amplitudes(prep.alpha, prep.fock_m, cutoffs.m_max, cutoffs.m_max)
    fld, leak_n = _mode_amplitudes(prep.beta, prep.fock_p, field_support(prep.level, cutoffs.n_max),
                                   cutoffs.n_max)
    return motion, fld, leak_m, leak_n


def prepare_initial_state(prep, cutoffs, eps=DEFAULT_EPS):
    """Product state for ``prep`` on the truncated space, renormalised.

    The leakage recorded on the state is the probability that the untruncated
    preparation places outside the cutoffs.  A leakage above ``eps`` raises
    :class:`TruncationError`.
    """
    motion, fld, leak_m, leak_n = initial_mode_vectors(prep, cutoffs)
    leakage = leak_m + leak_n - leak_m * leak_n
    if leakage > eps:
        raise TruncationError(f"truncation leakage {leakage:.3e} exceeds eps={eps:.1e}; raise the cutoffs")
    elec = np.zeros(3)
    elec[LEVELS[prep.level]] = 1.0
    amps = motion[:, None, None] * fld[None, :, None] * elec[None, None, :]
    amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
    return CompositeState(amps, 0.0, leakage)


def population(state, level):
    """Probability of electronic ``level`` (``'g'``, ``'r'``, ``'e'`` or 0/1/2)."""
    idx = LEVELS[level] if isinstance(level, str) else int(level)
    return float(np.sum(np.abs(state.amplitudes[..., idx]) ** 2))
