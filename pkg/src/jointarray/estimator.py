"""Maximum-likelihood angle estimation by joint Tx-Rx beamforming.

For a known waveform ``S`` the MLE maximises::

    |y^H (S a_t(w) kron a_r(w))|^2 / ||S a_t(w)||^2

over candidate angles ``w``. The beamformer is evaluated on a uniform grid
and the peak refined by a three-point parabolic fit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import SensorArray
from .signal import Measurement, noiseless_response, steering_matrix

# transmit power toward a candidate below this counts as a null
NULL_POWER = 1e-15


class GridResolutionWarning(UserWarning):
    """The refined grid quantisation error is not negligible against the CRB."""


@dataclass(frozen=True)
class MleConfig:
    grid_points: int = 4096
    refinement: str = "parabolic"
    search_interval: tuple[float, float] = (-math.pi, math.pi)

    def __post_init__(self):
        if self.grid_points < 16:
            raise ValueError(f"grid_points must be >= 16, got {self.grid_points}")
        if self.refinement not in ("none", "parabolic"):
            raise ValueError(f"unknown refinement {self.refinement!r}")
        lo, hi = self.search_interval
        if not (-math.pi <= lo < hi <= math.pi):
            raise ValueError(
                f"search interval must be a nonempty subset of [-pi, pi), got {(lo, hi)}")

    @property
    def full_circle(self) -> bool:
        lo, hi = self.search_interval
        return lo == -math.pi and hi == math.pi

    def grid(self) -> np.ndarray:
        lo, hi = self.search_interval
        return lo + (hi - lo) * np.arange(self.grid_points) / self.grid_points

    @property
    def spacing(self) -> float:
        lo, hi = self.search_interval
        return (hi - lo) / self.grid_points


def wrap_angle(x):
    """Wrap into ``[-pi, pi)``."""
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


def wrap_error(omega_hat, omega):
    """Signed estimation error wrapped into ``[-pi, pi)``."""
    err = wrap_angle(np.asarray(omega_hat, dtype=float) - omega)
    return float(err) if np.ndim(err) == 0 else err


def beamformer_weights(tx: SensorArray, rx: SensorArray, s: np.ndarray,
                       omegas) -> np.ndarray:
    """Normalised joint beamformers, shape ``(T*Nr, len(omegas))``.

    Column ``g`` is ``(S a_t(w_g) kron a_r(w_g)) / ||S a_t(w_g)||`` so that
    ``|y^H W|^2`` is the ML objective. Columns steering into a transmit null
    are zero.
    """
    s = np.atleast_2d(np.asarray(s, dtype=complex))
    b = s @ steering_matrix(tx, omegas)           # (T, G)
    ar = steering_matrix(rx, omegas)              # (Nr, G)
    power = np.sum(np.abs(b) ** 2, axis=0)
    scale = np.zeros_like(power)
    ok = power >= NULL_POWER
    scale[ok] = 1.0 / np.sqrt(power[ok])
    w = (b[:, None, :] * ar[None, :, :]).reshape(-1, b.shape[1])
    return w * scale


def _as_vector(y):
    return y.y if isinstance(y, Measurement) else np.asarray(y, dtype=complex)


def mle_objective(y, tx: SensorArray, rx: SensorArray, s: np.ndarray,
                  omega_bar) -> np.ndarray | float:
    """ML objective at one or several candidate angles."""
    vec = _as_vector(y)
    w = beamformer_weights(tx, rx, s, np.atleast_1d(omega_bar))
    vals = np.abs(vec.conj() @ w) ** 2
    return float(vals[0]) if np.ndim(omega_bar) == 0 else vals


class GridMle:
    """Precomputed grid beamformer for one geometry and waveform.

    The weight matrix is built once and shared read-only across trials;
    :meth:`estimate_batch` handles a stack of measurements with a single
    matrix product.
    """

    def __init__(self, tx: SensorArray, rx: SensorArray, s: np.ndarray,
                 cfg: MleConfig | None = None):
        self.tx, self.rx = tx, rx
        self.s = np.atleast_2d(np.asarray(s, dtype=complex))
        self.cfg = cfg or MleConfig()
        self.grid = self.cfg.grid()
        self.weights = beamformer_weights(tx, rx, self.s, self.grid)

    def spectrum(self, ys: np.ndarray) -> np.ndarray:
        """Objective on the grid for each row of ``ys`` (shape ``(K, T*Nr)``)."""
        return np.abs(np.atleast_2d(ys).conj() @ self.weights) ** 2

    def estimate_batch(self, ys: np.ndarray) -> np.ndarray:
        return self._peak(self.spectrum(ys))

    def _peak(self, spec):
        # argmax returns the first maximum, i.e. the smallest candidate angle
        k = np.argmax(spec, axis=1)
        est = self.grid[k]
        if self.cfg.refinement == "parabolic":
            est = est + self._parabolic_offset(spec, k)
        return wrap_angle(est) if self.cfg.full_circle else est

    def estimate(self, y) -> float:
        return float(self.estimate_batch(_as_vector(y)[None, :])[0])

    def _parabolic_offset(self, spec, k):
        g = self.cfg.grid_points
        rows = np.arange(spec.shape[0])
        if self.cfg.full_circle:
            left, right = (k - 1) % g, (k + 1) % g
            usable = np.ones_like(k, dtype=bool)
        else:
            usable = (k > 0) & (k < g - 1)
            left, right = np.clip(k - 1, 0, g - 1), np.clip(k + 1, 0, g - 1)
        fm, f0, fp = spec[rows, left], spec[rows, k], spec[rows, right]
        curv = fm - 2 * f0 + fp
        usable &= curv < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = np.where(usable, 0.5 * (fm - fp) / curv, 0.0)
        return np.clip(delta, -0.5, 0.5) * self.cfg.spacing

    def quantization_mse(self, omega: float, offsets: int = 32) -> float:
        """Mean squared noiseless error for true angles spread over one grid cell.

        Measures how much the grid (after refinement) alone contributes to
        the MSE near ``omega``.
        """
        shifts = (np.arange(offsets) + 0.5) / offsets - 0.5
        truths = omega + shifts * self.cfg.spacing
        ys = np.stack([noiseless_response(self.tx, self.rx, self.s, t) for t in truths])
        spec = self.spectrum(ys)
        # only the cells next to the truth compete, so grating lobes of
        # aliased geometries do not masquerade as quantisation error
        dist = np.abs(wrap_error(self.grid[None, :], truths[:, None]))
        spec = np.where(dist <= 3 * self.cfg.spacing, spec, -1.0)
        err = wrap_error(self._peak(spec), truths)
        return float(np.mean(err ** 2))


def mle_estimate(y, tx: SensorArray, rx: SensorArray, s: np.ndarray,
                 cfg: MleConfig | None = None) -> float:
    """Grid-search MLE of the target angle for a single measurement."""
    return GridMle(tx, rx, s, cfg).estimate(y)


def check_grid_resolution(mle: GridMle, omega: float, min_crb: float,
                          fraction: float = 0.1) -> float:
    """Warn if refined quantisation MSE is not below ``fraction * min_crb``.

    Returns the measured quantisation MSE.
    """
    q = mle.quantization_mse(omega)
    if q >= fraction * min_crb:
        warnings.warn(
            f"grid quantisation MSE {q:.3e} is not below {fraction:g} x CRB "
            f"({min_crb:.3e}); increase grid_points",
            GridResolutionWarning, stacklevel=2)
    return q
