"""Single-target Cramér-Rao bounds on the angle.

Two routes are provided. :func:`crb_general` evaluates the projection form
for an arbitrary waveform; :func:`crb_closed_form` is the simplification
valid under transmit beamforming, where the bound depends only on ``Nt``,
``Nr`` and the receive spatial variance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import SensorArray, spatial_variance
from .signal import DimensionError, effective_steering

# projection norm below this fraction of ||v_dot||^2 is structural, not roundoff
DEGENERACY_RTOL = 1e-12


class UnidentifiableError(ValueError):
    """The angle is not identifiable in this scenario (infinite CRB)."""


@dataclass(frozen=True)
class CrbResult:
    value: float
    branch: str
    sigma2: float
    gamma_power: float
    nt: int
    nr: int
    chi_rx: Fraction | None = None
    tx: SensorArray | None = None
    rx: SensorArray | None = None

    def __float__(self):
        return self.value


def _check_noise(gamma, sigma2):
    if not sigma2 > 0:
        raise ValueError(f"noise power must be positive, got {sigma2}")
    if gamma == 0:
        raise UnidentifiableError("reflection coefficient is zero")


def crb_general(tx: SensorArray, rx: SensorArray, s: np.ndarray, omega: float,
                gamma: complex = 1.0, sigma2: float = 1.0) -> CrbResult:
    """CRB for an arbitrary waveform ``s`` of shape ``(T, Nt)``.

    With ``v = (S kron I) a_tr`` and ``w = (S kron I) d a_tr / d omega`` the
    bound is ``sigma2 / (2 |gamma|^2) / ||P_perp(v) w||^2``; because ``v`` is
    a single column, ``||P_perp(v) w||^2 = ||w||^2 - |v^H w|^2 / ||v||^2``.

    Raises
    ------
    UnidentifiableError
        If the projected derivative vanishes.
    """
    _check_noise(gamma, sigma2)
    s = np.atleast_2d(np.asarray(s, dtype=complex))
    if s.shape[1] != len(tx):
        raise DimensionError(
            f"waveform has {s.shape[1]} columns but there are {len(tx)} transmitters")
    a, da = effective_steering(tx, rx, omega, derivative=True)
    nr = len(rx)
    # (S kron I) x == vec((S @ X.reshape(Nt, Nr)))
    v = (s @ a.reshape(len(tx), nr)).ravel()
    w = (s @ da.reshape(len(tx), nr)).ravel()

    ww = np.vdot(w, w).real
    vv = np.vdot(v, v).real
    denom = ww - abs(np.vdot(v, w)) ** 2 / vv if vv > 0 else ww
    if denom <= DEGENERACY_RTOL * ww:
        raise UnidentifiableError(
            f"projected derivative norm {denom:.3e} is degenerate "
            f"(tx={tx}, rx={rx})")
    gp = abs(gamma) ** 2
    return CrbResult(value=float(sigma2 / (2 * gp) / denom), branch="general",
                     sigma2=float(sigma2), gamma_power=gp, nt=len(tx), nr=nr,
                     tx=tx, rx=rx)


def crb_closed_form(nt: int, nr: int, chi_rx, gamma: complex = 1.0,
                    sigma2: float = 1.0) -> CrbResult:
    """``sigma2 / (2 |gamma|^2) / (Nt * Nr * chi_rx)``.

    ``chi_rx`` may be a :class:`~fractions.Fraction`; the product
    ``Nt * Nr * chi_rx`` is formed exactly before conversion to float.
    """
    _check_noise(gamma, sigma2)
    chi = Fraction(chi_rx) if isinstance(chi_rx, (int, Fraction)) else chi_rx
    if chi <= 0:
        raise UnidentifiableError("receive spatial variance is zero")
    gp = abs(gamma) ** 2
    info = float(2 * nt * nr * chi) if isinstance(chi, Fraction) else 2.0 * nt * nr * chi
    return CrbResult(value=float(sigma2 / gp / info), branch="closed_form",
                     sigma2=float(sigma2), gamma_power=gp, nt=nt, nr=nr,
                     chi_rx=chi if isinstance(chi, Fraction) else None)


def crb_for_arrays(tx: SensorArray, rx: SensorArray, gamma: complex = 1.0,
                   sigma2: float = 1.0) -> CrbResult:
    """Closed-form CRB for a geometry pair under the optimal waveform."""
    res = crb_closed_form(len(tx), len(rx), spatial_variance(rx), gamma, sigma2)
    return CrbResult(**{**res.__dict__, "tx": tx, "rx": rx})


def snr_to_sigma2(snr_db: float, gamma: complex = 1.0) -> float:
    """Noise power giving ``10 log10(|gamma|^2 / sigma2) = snr_db``."""
    return abs(gamma) ** 2 * 10.0 ** (-snr_db / 10.0)
