"""Numerical Schrodinger propagation of the full, carrier and effective models.

Two independent propagation paths are provided.  For a time-independent
Hamiltonian the default is exact propagation in the eigenbasis, done per
connected block of the Hamiltonian's sparsity graph (the models conserve an
excitation number, so blocks stay small).  The adaptive DOP853 path works for
any Hamiltonian and is the only option in the interaction frame.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .dynamics_effective import PgSeries, pg_series, truncation_bounds
from .hilbert import (
    DEFAULT_EPS,
    FockCutoffs,
    build_carrier_hamiltonian,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    free_energies,
    full_interaction,
    prepare_initial_state,
)

FRAMES = ("lab", "interaction")
NUMERIC_TAGS = {"full": "full-numeric", "carrier": "carrier-numeric", "effective": "effective-numeric"}
BUILDERS = {
    "full": build_full_hamiltonian,
    "carrier": build_carrier_hamiltonian,
    "effective": build_effective_hamiltonian,
}


class IntegrationError(RuntimeError):
    """Propagation failed; ``time`` is where the failure was detected."""

    def __init__(self, message, time):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


@dataclass(frozen=True)
class IntegrationConfig:
    """Tolerances for the step-based integrator.

    ``max_step`` is measured in units of ``1/nu``.  ``method`` selects exact
    eigenbasis propagation (``"eigen"``) or the adaptive integrator (``"ode"``)
    for time-independent Hamiltonians.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = 0.05
    norm_drift_limit: float = 1e-6
    frame: str = "lab"
    method: str = "eigen"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise ValueError("tolerances and max_step must be > 0")
        if self.norm_drift_limit < 10 * self.rel_tol:
            raise ValueError("norm_drift_limit must be >= 10 * rel_tol")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        if self.method not in ("eigen", "ode"):
            raise ValueError("method must be 'eigen' or 'ode'")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    populations: np.ndarray  # (len(times), 3), columns g, r, e
    norms: np.ndarray
    states: np.ndarray | None = None

    def energy(self, H):
        """``<psi(t)|H|psi(t)>`` along the stored states."""
        if self.states is None:
            raise ValueError("trajectory was run without store_states=True")
        return np.einsum("ti,ij,tj->t", self.states.conj(), H, self.states).real


@dataclass(frozen=True)
class ComparisonReport:
    tau_grid: np.ndarray
    traces: dict = field(repr=False)
    max_dev_pg: dict
    max_pr: dict
    regime_ratios: tuple


def _as_vector(psi0):
    vec = getattr(psi0, "vector", psi0)
    return np.asarray(vec, dtype=complex).reshape(-1)


def _populations(states):
    probs = np.abs(states) ** 2
    return probs.reshape(states.shape[0], -1, 3).sum(axis=1)


def _check_norms(times, norms, limit):
    drift = np.abs(norms - 1.0)
    bad = np.flatnonzero(drift > limit)
    if bad.size:
        k = bad[0]
        raise IntegrationError(f"norm drift {drift[k]:.3e} exceeds {limit:.1e}", times[k])


def _propagate_eigen(H, psi0, times, store_states, chunk=256):
    n_comp, labels = connected_components(csr_matrix(np.abs(H) > 0), directed=False)
    t_rel = times - times[0]
    pops = np.zeros((times.size, 3))
    norm2 = np.zeros(times.size)
    states = np.zeros((times.size, psi0.size), dtype=complex) if store_states else None
    for label in range(n_comp):
        idx = np.flatnonzero(labels == label)
        if not np.any(psi0[idx]):
            continue
        sub = H[np.ix_(idx, idx)]
        # a large common diagonal offset would cost eigenvalue precision
        shift = np.mean(np.diag(sub).real)
        w, v = scipy.linalg.eigh(sub - shift * np.eye(idx.size))
        coeff = v.conj().T @ psi0[idx]
        levels = idx % 3
        for start in range(0, times.size, chunk):
            sl = slice(start, start + chunk)
            block = (np.exp(-1j * np.outer(t_rel[sl], w)) * coeff) @ v.T
            block *= np.exp(-1j * shift * t_rel[sl])[:, None]
            prob = np.abs(block) ** 2
            norm2[sl] += prob.sum(axis=1)
            for s in range(3):
                pops[sl, s] += prob[:, levels == s].sum(axis=1)
            if store_states:
                states[sl, idx] = block
    return pops, norm2, states


def _propagate_ode(H, psi0, times, config, nu):
    if callable(H):
        def rhs(t, y):
            return -1j * (H(t) @ y)
    else:
        def rhs(t, y):
            return -1j * (H @ y)
    max_step = config.max_step / nu if nu else np.inf
    sol = solve_ivp(rhs, (times[0], times[-1]), psi0, method="DOP853", t_eval=times,
                    rtol=config.rel_tol, atol=config.abs_tol, max_step=max_step)
    if not sol.success:
        t_fail = sol.t[-1] if sol.t.size else times[0]
        raise IntegrationError(f"integrator failed: {sol.message}", t_fail)
    return sol.y.T


def integrate_schrodinger(H, psi0, times, config=None, *, nu=None, store_states=False):
    """Solve ``i d psi/dt = H psi`` and sample the state on ``times``.

    Parameters
    ----------
    H : ndarray or callable
        Hermitian matrix, or ``H(t)`` returning one (step-based path only).
    psi0 : CompositeState or array_like
        State at ``times[0]``.
    times : array_like
        Strictly increasing output times, in the Hamiltonian's time unit.
    config : IntegrationConfig, optional
    nu : float, optional
        Fastest rate of the problem; bounds the step size of the ``"ode"`` path.
    store_states : bool
        Keep the full state at every output time.

    Returns
    -------
    Trajectory

    Raises
    ------
    IntegrationError
        If the norm drifts by more than ``config.norm_drift_limit``; the
        offending time is attached.  States are never renormalised.
    """
    config = config or IntegrationConfig()
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be one-dimensional and strictly increasing")
    psi0 = _as_vector(psi0)
    if psi0.size % 3:
        raise ValueError("state length must be a multiple of 3 (electronic index last)")

    if callable(H) or config.method == "ode":
        states = _propagate_ode(H, psi0, times, config, nu)
        norms = np.sum(np.abs(states) ** 2, axis=1)
        pops = _populations(states)
        if not store_states:
            states = None
    else:
        H = np.asarray(H)
        if H.shape != (psi0.size, psi0.size):
            raise ValueError(f"H shape {H.shape} does not match state size {psi0.size}")
        pops, norms, states = _propagate_eigen(H, psi0, times, store_states)
    _check_norms(times, norms, config.norm_drift_limit)
    return Trajectory(times, pops, norms, states)


def interaction_frame_hamiltonian(params, cutoffs, t):
    """Full-model interaction ``exp(i H0 t) V exp(-i H0 t)`` with ``H0`` the free part."""
    e = free_energies(params, cutoffs)
    v = full_interaction(params, cutoffs)
    return v * np.exp(1j * np.subtract.outer(e, e) * t)


class _InteractionFrame:
    """Callable ``H_I(t)`` that reuses the static pieces between calls."""

    def __init__(self, params, cutoffs):
        self.energies = free_energies(params, cutoffs)
        self.v = full_interaction(params, cutoffs)

    def __call__(self, t):
        phase = np.exp(1j * self.energies * t)
        return (phase[:, None] * self.v) * phase.conj()[None, :]

    def to_lab(self, states, times):
        return states * np.exp(-1j * np.outer(times, self.energies))


def evolve_model(model, params, prep, tau_grid, config=None, cutoffs=None,
                 eps=DEFAULT_EPS, motion_headroom=None):
    """Numerically propagate one model and return its level populations.

    ``tau_grid`` is in units of ``1 / g_eff``.  The full model gets
    ``motion_headroom`` (default 4) extra motion levels for the sidebands
    that the cosine coupling can excite.
    """
    if model not in BUILDERS:
        raise ValueError(f"unknown model {model!r}")
    config = config or IntegrationConfig()
    tau = np.asarray(tau_grid, dtype=float)
    if cutoffs is None:
        base = truncation_bounds(prep, eps)
        extra = (4 if model == "full" else 0) if motion_headroom is None else motion_headroom
        cutoffs = FockCutoffs(base.m_max + extra, base.n_max, base.pad)
    psi0 = prepare_initial_state(prep, cutoffs, eps)
    times = params.time_from_tau(tau)

    if config.frame == "interaction":
        if model != "full":
            raise ValueError("the interaction frame is implemented for the full model")
        frame = _InteractionFrame(params, cutoffs)
        traj = integrate_schrodinger(frame, psi0, times, config, nu=params.nu)
    else:
        H = BUILDERS[model](params, cutoffs)
        traj = integrate_schrodinger(H, psi0, times, config, nu=params.nu)
    p = traj.populations
    return PgSeries(tau, p[:, 0], NUMERIC_TAGS[model], p_r=p[:, 1], p_e=p[:, 2],
                    deficit=psi0.leakage, cutoffs=cutoffs)


def regime_ratios(params):
    g = max(params.g1, params.g2)
    return (params.nu / params.delta, params.delta / g if g > 0 else np.inf)


def compare_models(params, prep, tau_grid, config=None, eps=DEFAULT_EPS, motion_headroom=4):
    """Propagate full and carrier models, evaluate the effective one analytically, compare.

    Returns the maximal pairwise ``|Delta P_g|`` over the grid and the largest
    population of level r reached by the full and carrier models.
    """
    tau = np.asarray(tau_grid, dtype=float)
    traces = {
        "full": evolve_model("full", params, prep, tau, config, eps=eps,
                             motion_headroom=motion_headroom),
        "carrier": evolve_model("carrier", params, prep, tau, config, eps=eps),
        "effective": pg_series(params, prep, tau, eps),
    }
    pairs = [("full", "carrier"), ("full", "effective"), ("carrier", "effective")]
    max_dev = {f"{a}-{b}": float(np.max(np.abs(traces[a].values - traces[b].values)))
               for a, b in pairs}
    max_pr = {k: float(np.max(traces[k].p_r)) for k in ("full", "carrier")}
    return ComparisonReport(tau, traces, max_dev, max_pr, regime_ratios(params))


def regime_sweep(points, prep, tau_grid, config=None, eps=DEFAULT_EPS, max_workers=None):
    """Run :func:`compare_models` for each ``SystemParams`` in ``points``; order preserved."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda p: compare_models(p, prep, tau_grid, config, eps), points))
