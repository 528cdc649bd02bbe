"""The generic acquisition family a_l(x) = F(q^2(x) k_Xl(x,x)) b_l(x).

Covers the published adaptive terms (WSABI-L/M, MMLT, VBMC) plus a
constant rule that reduces selection to scaled uncertainty sampling
(P-greedy). The outer function F carries the concavity constant psi used
by the weak-greedy certificate, and each rule can report the theoretical
weak-adaptivity envelope [C_L, C_U] when its sufficient condition holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gp
from .exceptions import DomainError, WeakAdaptivityViolation

_B_FLOOR = 1e-300


class OuterFunction:
    def __call__(self, y):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def psi(self, c):
        """Constant with F^{-1}(c y) >= psi(c) F^{-1}(y) for all y >= 0."""
        raise NotImplementedError


@dataclass(frozen=True)
class Power(OuterFunction):
    """F(y) = y^delta."""

    delta: float = 1.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def __call__(self, y):
        return np.asarray(y, dtype=float) ** self.delta

    def inverse(self, y):
        return np.asarray(y, dtype=float) ** (1.0 / self.delta)

    def psi(self, c):
        _check_psi_arg(c)
        return c ** (1.0 / self.delta)


@dataclass(frozen=True)
class Expm1(OuterFunction):
    """F(y) = exp(y) - 1."""

    def __call__(self, y):
        return np.expm1(np.asarray(y, dtype=float))

    def inverse(self, y):
        return np.log1p(np.asarray(y, dtype=float))

    def psi(self, c):
        _check_psi_arg(c)
        return c


def _check_psi_arg(c):
    if not 0 < c <= 1:
        raise DomainError(f"psi is defined for c in (0, 1], got {c}")


def psi(outer, c):
    return outer.psi(c)


class AdaptiveTermRule:
    name = "base"

    def evaluate(self, state, X, ell):
        """b_l over a batch of points; must be strictly positive."""
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantRule(AdaptiveTermRule):
    value: float = 1.0
    name = "constant"

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("constant rule needs a positive value")

    def evaluate(self, state, X, ell):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.full(X.shape[0], float(self.value))


@dataclass(frozen=True)
class WsabiL(AdaptiveTermRule):
    """b_l(x) = m_{g,Xl}^2(x)."""

    name = "wsabi_l"

    def evaluate(self, state, X, ell):
        return gp.posterior_mean(state, X) ** 2


@dataclass(frozen=True)
class WsabiM(AdaptiveTermRule):
    """b_l(x) = k_Xl(x,x)/2 + m_{g,Xl}^2(x)."""

    name = "wsabi_m"

    def evaluate(self, state, X, ell):
        return 0.5 * gp.posterior_var(state, X) + gp.posterior_mean(state, X) ** 2


@dataclass(frozen=True)
class Mmlt(AdaptiveTermRule):
    """b_l(x) = exp(k_Xl(x,x) + 2 m_{g,Xl}(x))."""

    name = "mmlt"

    def evaluate(self, state, X, ell):
        return np.exp(gp.posterior_var(state, X) + 2.0 * gp.posterior_mean(state, X))


@dataclass(frozen=True)
class Vbmc(AdaptiveTermRule):
    """b_l(x) = pi_l^{delta2}(x) exp(delta3 m_{g,Xl}(x)).

    The density sequence is user supplied (a single density counts as a
    constant sequence); no variational loop runs here.
    """

    densities: tuple
    delta2: float = 1.0
    delta3: float = 1.0
    name = "vbmc"

    def __post_init__(self):
        if self.delta2 < 0 or self.delta3 < 0:
            raise ValueError("delta2 and delta3 must be nonnegative")
        dens = self.densities
        if not isinstance(dens, (tuple, list)):
            dens = (dens,)
        object.__setattr__(self, "densities", tuple(dens))

    def density_at(self, ell):
        if len(self.densities) == 1:
            return self.densities[0]
        if ell >= len(self.densities):
            raise DomainError(
                f"vbmc density sequence has no entry for iteration {ell}"
            )
        return self.densities[ell]

    def evaluate(self, state, X, ell):
        dens = self.density_at(ell)
        pvals = dens(X)
        if np.any(pvals <= 0):
            raise WeakAdaptivityViolation(
                "vbmc density is nonpositive somewhere on the evaluated points"
            )
        return pvals ** self.delta2 * np.exp(self.delta3 * gp.posterior_mean(state, X))


@dataclass(frozen=True)
class AcquisitionSpec:
    outer: OuterFunction
    q: object  # strictly positive Density
    b: AdaptiveTermRule
    gamma_tilde: float = 1.0

    def __post_init__(self):
        if not 0 < self.gamma_tilde <= 1:
            raise ValueError("gamma_tilde must lie in (0, 1]")
        if not getattr(self.q, "strictly_positive", False):
            raise ValueError("q must be a strictly positive density")

    def eval_b(self, state, X, ell):
        return self.b.evaluate(state, X, ell)

    def evaluate(self, state, X, ell):
        """Acquisition values over a batch; returns (a, clamp_count).

        clamp_count is the number of b values lifted to the 1e-300 floor
        before multiplication.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        var = gp.posterior_var(state, X)
        qv = self.q(X)
        bv = self.b.evaluate(state, X, ell)
        clamped = int(np.count_nonzero(bv < _B_FLOOR))
        bv = np.maximum(bv, _B_FLOOR)
        return self.outer(qv ** 2 * var) * bv, clamped


@dataclass(frozen=True)
class ClcuResult:
    """Theoretical weak-adaptivity envelope, or the reason it is absent."""

    present: bool
    c_l: float = float("nan")
    c_u: float = float("nan")
    reason: str = ""


def theoretical_clcu(rule, m_inf_low, m_inf_high, gnorm, k_inf,
                     density_low=None, density_high=None):
    """[C_L, C_U] from the per-rule sufficient conditions.

    m_inf_low = inf |m|, m_inf_high = sup |m|, gnorm = native norm of the
    expansion part, k_inf = sup k(x,x). VBMC additionally needs uniform
    bounds on its density sequence.
    """
    if any(v < 0 for v in (m_inf_low, m_inf_high, gnorm, k_inf)):
        raise ValueError("all norm arguments must be nonnegative")
    spread = 2.0 * gnorm * np.sqrt(k_inf)
    if isinstance(rule, ConstantRule):
        return ClcuResult(True, rule.value, rule.value)
    if isinstance(rule, WsabiL):
        if m_inf_low <= spread:
            return ClcuResult(
                False,
                reason=f"hypothesis inf|m| > 2||g||sqrt(sup k) fails "
                       f"({m_inf_low} <= {spread})",
            )
        return ClcuResult(True, (m_inf_low - spread) ** 2, (m_inf_high + spread) ** 2)
    if isinstance(rule, WsabiM):
        if m_inf_low <= spread:
            return ClcuResult(
                False,
                reason=f"hypothesis inf|m| > 2||g||sqrt(sup k) fails "
                       f"({m_inf_low} <= {spread})",
            )
        return ClcuResult(
            True,
            (m_inf_low - spread) ** 2,
            0.5 * k_inf + (m_inf_high + spread) ** 2,
        )
    if isinstance(rule, Mmlt):
        return ClcuResult(
            True,
            float(np.exp(-2.0 * m_inf_high - 2.0 * spread)),
            float(np.exp(k_inf + 2.0 * m_inf_high + 2.0 * spread)),
        )
    if isinstance(rule, Vbmc):
        if density_low is None or density_high is None:
            return ClcuResult(
                False, reason="no uniform bounds supplied for the density sequence"
            )
        width = rule.delta3 * (m_inf_high + spread)
        return ClcuResult(
            True,
            density_low ** rule.delta2 * float(np.exp(-width)),
            density_high ** rule.delta2 * float(np.exp(width)),
        )
    return ClcuResult(False, reason=f"no known envelope for rule {rule.name}")
