"""Asymptotic reverse-reconciliation key rate for GMCS with heterodyne detection.

Eve's information is bounded by the Holevo quantity of an entangling-cloner
collective attack. In the default trusted-receiver model the detector
inefficiency and electronic noise are not attributed to Eve; they are
represented by a beamsplitter of transmittance ``eta`` whose second input
is one half of an EPR pair. Excess noise measured at Bob, ``eps``, enters
the channel model input-referred as ``xi = eps / (eta * T)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, NoThresholdError, ShapeError
from .estimation import mutual_information
from .model import SystemParams

EPS_CLAMP = 1e-9
SYMPLECTIC_TOL = 1e-9


def g_function(x: float) -> float:
    """Entropy (bits) of a thermal state with mean photon number ``x``."""
    if x < -EPS_CLAMP:
        raise DomainError(f"g_function argument must be >= 0, got {x}")
    if x <= 0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(cm) -> np.ndarray:
    """Sorted symplectic eigenvalues of a covariance matrix (x1, p1, x2, p2, ...)."""
    cm = np.asarray(cm, dtype=float)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] % 2:
        raise ShapeError(f"covariance matrix must be square with even size, got {cm.shape}")
    if not np.allclose(cm, cm.T, rtol=0, atol=1e-10 * max(1.0, np.abs(cm).max())):
        raise ShapeError("covariance matrix must be symmetric")
    n = cm.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cm)))
    return ev[::2]


def entropy(cm) -> float:
    """Von Neumann entropy (bits) of a Gaussian state."""
    total = 0.0
    for nu in symplectic_eigenvalues(cm):
        if nu < 1.0 - SYMPLECTIC_TOL:
            raise DomainError(f"unphysical covariance matrix: symplectic eigenvalue {nu}")
        total += g_function((nu - 1.0) / 2.0)
    return total


def two_mode_squeezed(v: float) -> np.ndarray:
    """EPR state with local variance ``v`` on each mode."""
    c = math.sqrt(max(v * v - 1.0, 0.0))
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    return np.block([[v * eye, c * z], [c * z, v * eye]])


@dataclass(frozen=True)
class _Channel:
    """Holevo-bound inputs after the trusted/untrusted split."""

    v: float
    t: float
    xi: float
    eta: float
    v_elec: float


def _channel(params: SystemParams, t: float, eps: float) -> _Channel:
    if not 0 < t <= 1:
        raise DomainError(f"t must lie in (0, 1], got {t}")
    if eps < -EPS_CLAMP:
        raise DomainError(f"excess noise must be >= 0, got {eps}")
    eps = max(eps, 0.0)
    v = params.v_mod + 1.0
    if params.trusted_receiver:
        return _Channel(v=v, t=t, xi=eps / (params.eta * t), eta=params.eta, v_elec=params.v_elec)
    t_eff = params.eta * t
    return _Channel(v=v, t=t_eff, xi=(eps + 2.0 * params.v_elec) / t_eff, eta=1.0, v_elec=0.0)


def alice_bob_cm(v: float, t: float, xi: float) -> np.ndarray:
    """Entanglement-based covariance matrix of Alice's EPR mode and the channel output."""
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    b = t * (v - 1.0) + 1.0 + t * xi
    c = math.sqrt(t * (v * v - 1.0))
    return np.block([[v * eye, c * z], [c * z, b * eye]])


def _heterodyne_condition(cm: np.ndarray, mode: int) -> np.ndarray:
    """Covariance of the remaining modes after heterodyning ``mode``."""
    idx = [2 * mode, 2 * mode + 1]
    rest = [i for i in range(cm.shape[0]) if i not in idx]
    g_r = cm[np.ix_(rest, rest)]
    g_m = cm[np.ix_(idx, idx)]
    sigma = cm[np.ix_(rest, idx)]
    return g_r - sigma @ np.linalg.inv(g_m + np.eye(2)) @ sigma.T


def holevo_bound_cm(params: SystemParams, t: float, eps: float) -> float:
    """Holevo bound built from explicit covariance matrices.

    Modes are ordered A (Alice), B (channel output), F and G (detector
    ancilla EPR pair). B and F meet on a beamsplitter of transmittance
    ``eta`` and the B output is heterodyned.
    """
    ch = _channel(params, t, eps)
    cm_ab = alice_bob_cm(ch.v, ch.t, ch.xi)
    s_e = entropy(cm_ab)

    if ch.eta == 1.0:
        if ch.v_elec > 0:
            raise DomainError("electronic noise cannot be modeled with a unit-efficiency beamsplitter")
        cond = _heterodyne_condition(cm_ab, 1)
        return s_e - entropy(cond)

    nu = 1.0 + 2.0 * ch.v_elec / (1.0 - ch.eta)
    cm = np.zeros((8, 8))
    cm[:4, :4] = cm_ab
    cm[4:, 4:] = two_mode_squeezed(nu)
    st, sr = math.sqrt(ch.eta), math.sqrt(1.0 - ch.eta)
    bs = np.eye(8)
    eye = np.eye(2)
    bs[2:4, 2:4] = st * eye
    bs[2:4, 4:6] = sr * eye
    bs[4:6, 2:4] = -sr * eye
    bs[4:6, 4:6] = st * eye
    cm = bs @ cm @ bs.T
    cond = _heterodyne_condition(cm, 1)
    return s_e - entropy(cond)


def holevo_bound_closed_form(params: SystemParams, t: float, eps: float) -> float:
    """Holevo bound from the analytic symplectic eigenvalues (A, B, C, D form)."""
    ch = _channel(params, t, eps)
    v, t, xi, eta = ch.v, ch.t, ch.xi, ch.eta
    chi_line = 1.0 / t - 1.0 + xi
    a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line) ** 2
    b = t * t * (v * chi_line + 1.0) ** 2
    disc = math.sqrt(max(a * a - 4.0 * b, 0.0))
    lam1 = math.sqrt(0.5 * (a + disc))
    lam2 = math.sqrt(max(0.5 * (a - disc), 0.0))

    chi_het = (1.0 + (1.0 - eta) + 2.0 * ch.v_elec) / eta
    chi_tot = chi_line + chi_het / t
    denom = (t * (v + chi_tot)) ** 2
    c = (
        a * chi_het**2
        + b
        + 1.0
        + 2.0 * chi_het * (v * math.sqrt(b) + t * (v + chi_line))
        + 2.0 * t * (v * v - 1.0)
    ) / denom
    d = ((v + math.sqrt(b) * chi_het) / (t * (v + chi_tot))) ** 2
    disc2 = math.sqrt(max(c * c - 4.0 * d, 0.0))
    lam3 = math.sqrt(0.5 * (c + disc2))
    lam4 = math.sqrt(max(0.5 * (c - disc2), 0.0))
    lams = (lam1, lam2, lam3, lam4)
    for lam in lams:
        if lam < 1.0 - 1e-7:
            raise DomainError(f"unphysical parameters: symplectic eigenvalue {lam}")
    g = [g_function(max(lam - 1.0, 0.0) / 2.0) for lam in lams]
    return g[0] + g[1] - g[2] - g[3]


def holevo_bound(params: SystemParams, t: float, eps: float, method: str = "cm") -> float:
    """Eve's Holevo information on Bob's data, bits per symbol."""
    if method == "cm":
        chi = holevo_bound_cm(params, t, eps)
    elif method == "closed":
        chi = holevo_bound_closed_form(params, t, eps)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(max(chi, 0.0))


@dataclass(frozen=True)
class KeyRateResult:
    i_ab: float
    chi_be: float
    skr_raw: float
    skr: float
    r_eff: float
    beta: float

    @classmethod
    def compose(cls, i_ab: float, chi_be: float, beta: float, r_eff: float) -> "KeyRateResult":
        raw = (beta * i_ab - chi_be) * r_eff
        return cls(i_ab=i_ab, chi_be=chi_be, skr_raw=raw, skr=max(0.0, raw), r_eff=r_eff, beta=beta)


def secret_key_rate(params: SystemParams, t: float, eps: float, method: str = "cm") -> KeyRateResult:
    """Asymptotic secret key rate in bits per second."""
    if -EPS_CLAMP <= eps < 0:
        eps = 0.0
    chi = holevo_bound(params, t, eps, method=method)
    i_ab = mutual_information(params, t, eps)
    return KeyRateResult.compose(i_ab, chi, params.beta, params.r_eff)


def epsilon_threshold(
    params: SystemParams, t: float, upper: float = 0.5, tol: float = 1e-5, method: str = "closed"
) -> float:
    """Excess noise at which the raw key rate crosses zero."""

    def raw(eps: float) -> float:
        return secret_key_rate(params, t, eps, method=method).skr_raw

    lo, hi = raw(0.0), raw(upper)
    if not lo > 0:
        raise NoThresholdError(f"key rate is not positive at zero excess noise (T = {t})")
    if hi > 0:
        raise NoThresholdError(f"key rate stays positive up to eps = {upper}")
    return float(bisect(raw, 0.0, upper, xtol=tol))


def aggregate_skr(results: Iterable[KeyRateResult | float]) -> float:
    """Sum of clamped per-core key rates."""
    total = 0.0
    for r in results:
        rate = r.skr if isinstance(r, KeyRateResult) else float(r)
        total += max(0.0, rate)
    return total
