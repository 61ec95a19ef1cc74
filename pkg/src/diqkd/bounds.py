"""Closed-form Holevo bounds and Devetak-Winter key rates.

All quantities are in bits per sifted key bit.
"""
from dataclasses import asdict, dataclass
import math

import numpy as np

from .errors import DomainError, NoRootError, UndefinedRegimeError, UnphysicalViolationError
from .qmat import BellDiagonalSpectrum, binary_entropy, shannon_entropy

TSIRELSON = 2 * math.sqrt(2)
S_TOL = 1e-9


def chsh_line(q):
    """CHSH value of the depolarised-Phi+ family, S = 2*sqrt(2)*(1 - 2Q)."""
    return TSIRELSON * (1 - 2 * q)


@dataclass(frozen=True)
class ObservedStatistics:
    S: float
    Q: float

    def __post_init__(self):
        if not (0.0 <= self.Q <= 0.5):
            raise DomainError(f"QBER must lie in [0, 0.5], got {self.Q!r}")
        if not abs(self.S) <= 4.0:
            raise DomainError(f"CHSH value must lie in [-4, 4], got {self.S!r}")


@dataclass(frozen=True)
class KeyRateReport:
    S: float
    Q: float
    iab: float
    chi_di: float
    r_di: float
    chi_std: float | None = None
    r_std: float | None = None

    def to_dict(self):
        return asdict(self)


def holevo_bound(S):
    """Upper bound F(S) on Eve's Holevo information given a CHSH value S.

    F(S) = h((1 + sqrt((S/2)^2 - 1)) / 2) for 2 < |S| <= 2*sqrt(2); below
    the local bound nothing is certified and F = 1.
    """
    s = abs(float(S))
    if s > TSIRELSON + S_TOL:
        raise UnphysicalViolationError(f"|S| = {s!r} exceeds the Tsirelson bound {TSIRELSON!r}")
    if s <= 2.0:
        return 1.0
    s = min(s, TSIRELSON)
    c = math.sqrt(max((s / 2) ** 2 - 1, 0.0))
    return binary_entropy(min((1 + c) / 2, 1.0))


def standard_holevo_bound(stats):
    """h(Q + S/(2*sqrt(2))), Eve's information when the devices are trusted qubits."""
    x = stats.Q + stats.S / TSIRELSON
    if x < -S_TOL or x > 1 + S_TOL:
        raise UndefinedRegimeError(f"Q + S/(2*sqrt(2)) = {x!r} lies outside [0, 1]")
    return binary_entropy(min(max(x, 0.0), 1.0))


def dw_rate(stats):
    """Devetak-Winter rate 1 - h(Q) - chi for both scenarios.

    Negative rates are returned as is.
    """
    iab = 1.0 - binary_entropy(stats.Q)
    chi_di = holevo_bound(stats.S)
    try:
        chi_std = standard_holevo_bound(stats)
    except UndefinedRegimeError:
        chi_std = None
    return KeyRateReport(
        S=stats.S,
        Q=stats.Q,
        iab=iab,
        chi_di=chi_di,
        r_di=iab - chi_di,
        chi_std=chi_std,
        r_std=None if chi_std is None else iab - chi_std,
    )


def _spectrum(spec):
    if isinstance(spec, BellDiagonalSpectrum):
        return spec
    return BellDiagonalSpectrum.from_array(spec)


def s_lambda(spec):
    """Largest (x,z)-plane CHSH value of a Bell-diagonal state."""
    lam = _spectrum(spec)
    return TSIRELSON * math.hypot(lam.phi_plus - lam.psi_minus, lam.phi_minus - lam.psi_plus)


def chi_lambda_upper(spec):
    """H(lambda) - h(lambda_Phi+ + lambda_Phi-)."""
    lam = _spectrum(spec)
    return shannon_entropy(lam.as_array()) - binary_entropy(lam.phi_plus + lam.phi_minus)


def rate_along(q, s_of_q, kind="device_independent"):
    stats = ObservedStatistics(S=float(s_of_q(q)), Q=float(q))
    report = dw_rate(stats)
    if kind == "device_independent":
        return report.r_di
    if kind == "standard":
        if report.r_std is None:
            raise UndefinedRegimeError(f"standard bound undefined at Q={q!r}")
        return report.r_std
    raise ValueError(f"unknown bound kind {kind!r}")


def _curve(s_of_q):
    if s_of_q is None:
        return chsh_line
    if callable(s_of_q):
        return s_of_q
    pts = np.asarray(s_of_q, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("sampled curve must be a sequence of (Q, S) pairs")
    pts = pts[np.argsort(pts[:, 0])]
    return lambda q: float(np.interp(q, pts[:, 0], pts[:, 1]))


def critical_qber(kind="device_independent", s_of_q=None, bracket=(0.0, 0.25), tol=1e-6):
    """QBER at which the key rate along ``s_of_q`` drops to zero.

    ``s_of_q`` is a callable Q -> S, a sequence of (Q, S) samples
    (linearly interpolated), or None for the line S = 2*sqrt(2)*(1 - 2Q).
    Bisection on ``bracket``; an exact zero at an endpoint is returned as
    the root.
    """
    f = _curve(s_of_q)
    lo, hi = bracket
    r_lo = rate_along(lo, f, kind)
    r_hi = rate_along(hi, f, kind)
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    if (r_lo > 0) == (r_hi > 0):
        raise NoRootError(f"key rate does not change sign on [{lo}, {hi}] ({r_lo:.3g}, {r_hi:.3g})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        r_mid = rate_along(mid, f, kind)
        if r_mid == 0.0:
            return mid
        if (r_mid > 0) == (r_lo > 0):
            lo, r_lo = mid, r_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
