"""Analytic dynamics of the effective two-photon model.

The effective Hamiltonian only couples ``|m, n, e>`` to ``|m, n+2, g>``; each
pair is a closed two-level block.  In the frame of the free Hamiltonian and in
units of ``g = g1 g2 / delta`` (time ``tau = g t``) the block evolves under the
real symmetric matrix ``[[chi1, chi2], [chi2, chi3]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

from .hilbert import DEFAULT_EPS, FIELD_HEADROOM, FockCutoffs, initial_mode_vectors
from .specfun import coupling_f, coupling_profile

MODEL_TAGS = (
    "effective-closed-form", "effective-general-r", "effective-numeric", "carrier-numeric", "full-numeric",
)


@dataclass(frozen=True)
class BlockCoefficients:
    """Block ``{|m, n, e>, |m, n+2, g>}`` of the effective model."""

    m: int
    n: int
    eta: float
    r: float
    chi1: float
    chi2: float
    chi3: float
    a0: complex = 1.0

    @property
    def f2(self):
        return coupling_f(self.m, self.eta) ** 2

    @property
    def lambda_mn(self):
        return math.sqrt((self.chi3 - self.chi1) ** 2 + 4.0 * self.chi2 ** 2)

    @property
    def matrix(self):
        return np.array([[self.chi1, self.chi2], [self.chi2, self.chi3]])


@dataclass(frozen=True)
class PgSeries:
    """Ground-state population on a time grid.

    ``p_r`` and ``p_e`` are filled in by the numerical models only.  ``deficit``
    is the initial probability lost to truncation; ``warning`` is set when it
    exceeds the requested tolerance.
    """

    tau_grid: np.ndarray
    values: np.ndarray
    model_tag: str
    p_r: np.ndarray | None = None
    p_e: np.ndarray | None = None
    deficit: float = 0.0
    warning: str | None = None
    cutoffs: FockCutoffs | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.model_tag not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.model_tag!r}")
        tau = np.asarray(self.tau_grid)
        if tau.ndim != 1 or (tau.size > 1 and np.any(np.diff(tau) <= 0)):
            raise ValueError("tau grid must be one-dimensional and strictly increasing")


def chi_coefficients(m, n, eta, r):
    """Return ``(chi1, chi2, chi3)`` for block ``(m, n)``."""
    if not r > 0:
        raise ValueError(f"coupling ratio r must be > 0, got {r!r}")
    if m < 0 or n < 0:
        raise ValueError("m and n must be >= 0")
    f2 = coupling_f(m, eta) ** 2
    return f2 * (n + 1) / r, math.sqrt((n + 1) * (n + 2)) * f2, r * f2 * (n + 2)


def make_block(m, n, eta, r=1.0, a0=1.0):
    chi1, chi2, chi3 = chi_coefficients(m, n, eta, r)
    return BlockCoefficients(m, n, float(eta), float(r), chi1, chi2, chi3, complex(a0))


def evolve_block_closed_form(block, tau):
    """Closed-form amplitudes ``(a, b)`` for ``r = 1`` and an initially empty ``|g>``.

    The common phase ``exp(-i (chi1 + chi3) tau / 2)`` is left out; it drops
    out of every probability.  Use :func:`evolve_block_general` when the phase
    matters.
    """
    if block.r != 1.0:
        raise ValueError("closed form requires r = 1; use evolve_block_general")
    tau = np.asarray(tau, dtype=float)
    f2 = block.chi3 - block.chi1
    lam = math.sqrt(f2 * f2 + 4.0 * block.chi2 ** 2)
    if lam == 0.0:
        return block.a0 * np.ones_like(tau, dtype=complex), np.zeros_like(tau, dtype=complex)
    half = 0.5 * lam * tau
    a = block.a0 * (np.cos(half) + 1j * (f2 / lam) * np.sin(half))
    b = -2j * block.a0 * (block.chi2 / lam) * np.sin(half)
    return a, b


def evolve_block_general(block, tau, a0, b0):
    """Exact block propagation for any ``r > 0`` by diagonalising the 2x2 matrix."""
    tau = np.asarray(tau, dtype=float)
    w, v = np.linalg.eigh(block.matrix)
    coeffs = v.T @ np.array([a0, b0], dtype=complex)
    phases = np.exp(-1j * np.multiply.outer(tau, w)) * coeffs
    out = phases @ v.T
    return out[..., 0], out[..., 1]


def truncation_bounds(prep, eps=DEFAULT_EPS):
    """Smallest cutoffs whose discarded coherent-state mass stays below ``eps``.

    With two coherent modes the budget is split evenly so that the total
    leakage of the product state is below ``eps``.  An excited ion gets two
    extra field levels for the emitted photon pair.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    budget = eps / max(prep.n_coherent, 1)

    def support(amp, fock):
        if fock is not None:
            return int(fock) + 1
        mean = abs(complex(amp)) ** 2
        k = 1
        while poisson.sf(k - 1, mean) >= budget:
            k += 1
        return k

    m_max = support(prep.alpha, prep.fock_m)
    n_max = support(prep.beta, prep.fock_p)
    if prep.level == "e":
        n_max += FIELD_HEADROOM
    return FockCutoffs(m_max, max(n_max, 3))


def _block_arrays(params, cutoffs, n_support):
    r = params.r
    f2 = coupling_profile(params.eta, cutoffs.m_max - 1).values ** 2
    n = np.arange(n_support, dtype=float)
    chi1 = np.outer(f2, (n + 1) / r)
    chi2 = np.outer(f2, np.sqrt((n + 1) * (n + 2)))
    chi3 = np.outer(f2, r * (n + 2))
    return chi1, chi2, chi3


def _transfer_amplitudes(params, chi1, chi2, chi3):
    """Return (amplitude, frequency) so that ``|b|^2 = |a0|^2 amp sin^2(freq tau / 2)``."""
    if params.r == 1.0:
        lam = np.sqrt((chi3 - chi1) ** 2 + 4.0 * chi2 ** 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            amp = np.where(lam > 0, 4.0 * chi2 ** 2 / lam ** 2, 0.0)
        return amp, lam
    mats = np.stack([np.stack([chi1, chi2], -1), np.stack([chi2, chi3], -1)], -2)
    w, v = np.linalg.eigh(mats)
    # |<g| U |e>|^2 = (2 v00 v10)^2 sin^2((w1 - w0) tau / 2)
    amp = (2.0 * v[..., 0, 0] * v[..., 1, 0]) ** 2
    return amp, w[..., 1] - w[..., 0]


def pg_series(params, prep, tau_grid, eps=DEFAULT_EPS, cutoffs=None, chunk=1024):
    """Ground-state population ``P_g(tau)`` of the effective model, summed block by block.

    Parameters
    ----------
    params : SystemParams
    prep : Preparation
        Must start the ion in ``|e>``.
    tau_grid : array_like
        Strictly increasing dimensionless times ``tau = g1 g2 t / delta``.
    eps : float
        Truncation tolerance used to size the cutoffs.
    cutoffs : FockCutoffs, optional
        Override the cutoffs from :func:`truncation_bounds`.

    Returns
    -------
    PgSeries
    """
    if prep.level != "e":
        raise ValueError("pg_series needs the ion initially in |e>")
    if params.delta == 0:
        raise ValueError("delta = 0: the effective model is singular")
    tau = np.asarray(tau_grid, dtype=float)
    if cutoffs is None:
        cutoffs = truncation_bounds(prep, eps)
    motion, fld, leak_m, leak_n = initial_mode_vectors(prep, cutoffs)
    deficit = leak_m + leak_n - leak_m * leak_n
    warning = None
    if deficit > eps:
        warning = f"truncation deficit {deficit:.3e} exceeds eps={eps:.1e}"

    n_support = cutoffs.n_max - FIELD_HEADROOM
    if params.g1 == 0 or params.g2 == 0:
        return PgSeries(tau, np.zeros_like(tau), "effective-closed-form",
                        deficit=deficit, warning=warning, cutoffs=cutoffs)
    tag = "effective-closed-form" if params.r == 1.0 else "effective-general-r"

    weight = np.abs(motion[:, None]) ** 2 * np.abs(fld[None, :n_support]) ** 2
    # same renormalised state as prepare_initial_state; the lost mass is in `deficit`
    weight /= weight.sum()
    chi1, chi2, chi3 = _block_arrays(params, cutoffs, n_support)
    amp, lam = _transfer_amplitudes(params, chi1, chi2, chi3)
    coef = (weight * amp).reshape(-1)
    lam = lam.reshape(-1)
    keep = coef > 0
    coef, lam = coef[keep], lam[keep]

    values = np.empty_like(tau)
    for start in range(0, tau.size, chunk):
        t = tau[start:start + chunk]
        terms = coef * np.sin(0.5 * np.outer(t, lam)) ** 2
        # contiguous last-axis reduction -> numpy pairwise summation
        values[start:start + chunk] = terms.sum(axis=1)
    return PgSeries(tau, values, tag, deficit=deficit, warning=warning, cutoffs=cutoffs)
