"""Laguerre polynomials, the motional coupling profile and coherent-state weights.

The coupling profile is the diagonal of the carrier operator
``f(a^dag a) = exp(-eta^2/2) :J0(2 eta sqrt(a^dag a)):``, which in the Fock basis
reads ``f(m) = exp(-eta^2/2) L_m(eta^2)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class DomainError(ValueError):
    """Raised when a special function is evaluated outside its domain."""


def _check_order(n):
    if int(n) != n or n < 0:
        raise DomainError(f"order must be a nonnegative integer, got {n!r}")
    return int(n)


def _check_argument(x):
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"argument must be finite and >= 0, got {x!r}")
    return x


def laguerre_table(n_max, x):
    """Return ``[L_0(x), ..., L_{n_max}(x)]`` from the upward three-term recurrence."""
    n_max = _check_order(n_max)
    x = _check_argument(x)
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 - x
    for k in range(1, n_max):
        out[k + 1] = ((2 * k + 1 - x) * out[k] - k * out[k - 1]) / (k + 1)
    return out


def laguerre(n, x):
    """Laguerre polynomial ``L_n(x)`` for ``x >= 0``.

    Parameters
    ----------
    n : int
        Polynomial order, ``n >= 0``.
    x : float
        Evaluation point, finite and nonnegative.

    Returns
    -------
    float

    Raises
    ------
    DomainError
        If ``n`` is not a nonnegative integer or ``x`` is negative or not finite.
    """
    return float(laguerre_table(n, x)[-1])


def coupling_f(m, eta):
    """Motional coupling ``f(m) = exp(-eta^2/2) L_m(eta^2)``."""
    eta = float(eta)
    if eta < 0:
        raise DomainError(f"eta must be >= 0, got {eta!r}")
    return math.exp(-0.5 * eta * eta) * laguerre(m, eta * eta)


def f_series_oracle(m, eta):
    """Evaluate ``<m| f |m>`` from the normally ordered power series.

    Uses ``<m| a^dag^k a^k |m> = m!/(m-k)!``, so the series terminates at
    ``k = m``.  Consecutive terms are built by their ratio, which keeps every
    intermediate finite; the sum is accumulated with ``math.fsum``.
    """
    m = _check_order(m)
    eta = float(eta)
    if not math.isfinite(eta) or eta < 0:
        raise DomainError(f"eta must be finite and >= 0, got {eta!r}")
    x = eta * eta
    term = 1.0
    terms = [term]
    for k in range(m):
        # t_{k+1} / t_k = -x (m - k) / (k + 1)^2
        term *= -x * (m - k) / ((k + 1) * (k + 1))
        terms.append(term)
    return math.exp(-0.5 * x) * math.fsum(terms)


def coherent_weight(k, amp):
    """Fock amplitude ``<k|amp> = exp(-|amp|^2/2) amp^k / sqrt(k!)``.

    Evaluated in log space so that large ``k`` neither overflows nor underflows
    prematurely; the phase ``arg(amp) * k`` is restored afterwards.
    """
    k = _check_order(k)
    amp = complex(amp)
    modulus = abs(amp)
    if modulus == 0.0:
        return complex(1.0 if k == 0 else 0.0)
    log_mag = -0.5 * modulus * modulus + k * math.log(modulus) - 0.5 * math.lgamma(k + 1)
    return cmath.exp(complex(log_mag, k * cmath.phase(amp)))


def coherent_weights(amp, size):
    """Vector of :func:`coherent_weight` for ``k = 0 .. size-1``."""
    return np.array([coherent_weight(k, amp) for k in range(size)], dtype=complex)


@dataclass(frozen=True)
class CouplingProfile:
    """Table of ``f(m)`` for ``m = 0 .. m_max`` at fixed ``eta``."""

    eta: float
    values: np.ndarray

    @property
    def m_max(self):
        return len(self.values) - 1

    def __call__(self, m):
        return self.values[m]

    def squared(self):
        return self.values ** 2


@lru_cache(maxsize=64)
def _profile_values(eta, m_max):
    values = math.exp(-0.5 * eta * eta) * laguerre_table(m_max, eta * eta)
    values.setflags(write=False)
    return values


def coupling_profile(eta, m_max):
    """Return the (memoized) :class:`CouplingProfile` for ``m = 0 .. m_max``."""
    eta = float(eta)
    if not math.isfinite(eta) or eta < 0:
        raise DomainError(f"eta must be finite and >= 0, got {eta!r}")
    return CouplingProfile(eta, _profile_values(eta, _check_order(m_max)))
