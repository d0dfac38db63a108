"""Narrowband active-sensing measurement model.

The received vector stacks ``T`` snapshots of the ``Nr`` receive sensors::

    y = (S kron I_Nr) (a_t(w) kron a_r(w)) gamma + n

Because ``(S kron I)(a_t kron a_r) = (S a_t) kron a_r``, entry ``t*Nr + r``
of the noiseless part is ``(S a_t)[t] * a_r[r] * gamma``.

Noise is circularly symmetric complex Gaussian drawn from numpy's ``PCG64``
bit generator via :class:`numpy.random.Generator`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SensorArray


class DimensionError(ValueError):
    """Raised when a waveform or measurement does not match the arrays."""


def _positions(d):
    if isinstance(d, SensorArray):
        return np.asarray(d.positions, dtype=float)
    return np.asarray(d, dtype=float)


def steering(d: SensorArray, omega: float) -> np.ndarray:
    """Steering vector with entries ``exp(1j * d[k] * omega)``."""
    return np.exp(1j * _positions(d) * omega)


def steering_derivative(d: SensorArray, omega: float) -> np.ndarray:
    pos = _positions(d)
    return 1j * pos * np.exp(1j * pos * omega)


def steering_matrix(d: SensorArray, omegas) -> np.ndarray:
    """Steering vectors for many angles, shape ``(len(d), len(omegas))``."""
    return np.exp(1j * np.outer(_positions(d), np.asarray(omegas, dtype=float)))


def effective_steering(tx: SensorArray, rx: SensorArray, omega: float,
                       derivative: bool = False):
    """Joint Tx-Rx steering vector ``a_t kron a_r``.

    With ``derivative=True`` returns the pair ``(a_tr, d a_tr / d omega)``.
    """
    at, ar = steering(tx, omega), steering(rx, omega)
    a = np.kron(at, ar)
    if not derivative:
        return a
    da = (np.kron(steering_derivative(tx, omega), ar)
          + np.kron(at, steering_derivative(rx, omega)))
    return a, da


@dataclass(frozen=True)
class Measurement:
    y: np.ndarray
    omega: float
    gamma: complex
    sigma2: float
    n_rx: int
    t_samples: int

    def __post_init__(self):
        if self.y.shape != (self.n_rx * self.t_samples,):
            raise DimensionError(
                f"measurement length {self.y.shape} != Nr*T = "
                f"{self.n_rx * self.t_samples}")

    def as_matrix(self) -> np.ndarray:
        """Reshape to ``(T, Nr)``: row ``t`` is the receive snapshot at time ``t``."""
        return self.y.reshape(self.t_samples, self.n_rx)


def waveform_power(s: np.ndarray) -> float:
    return float(np.sum(np.abs(s) ** 2))


def optimal_waveform(tx: SensorArray, omega: float, t_samples: int | None = None,
                     u: np.ndarray | None = None) -> np.ndarray:
    """Transmit beamforming waveform ``u a_t(omega)^H / sqrt(Nt)``.

    ``t_samples`` defaults to ``Nt``; ``u`` defaults to the normalised
    all-ones vector and is rescaled to unit norm if given.
    """
    nt = len(tx)
    if u is None:
        t_samples = nt if t_samples is None else t_samples
        if t_samples < 1:
            raise DimensionError(f"waveform length must be >= 1, got {t_samples}")
        u = np.full(t_samples, 1.0 / np.sqrt(t_samples), dtype=complex)
    else:
        u = np.asarray(u, dtype=complex).ravel()
        norm = np.linalg.norm(u)
        if norm == 0:
            raise DimensionError("u must be nonzero")
        u = u / norm
    return np.outer(u, steering(tx, omega).conj()) / np.sqrt(nt)


def orthogonal_waveform(nt: int, t_samples: int | None = None) -> np.ndarray:
    """Scaled identity ``I / sqrt(Nt)`` padded with zero rows to ``T >= Nt``."""
    t_samples = nt if t_samples is None else t_samples
    if t_samples < nt:
        raise DimensionError(
            f"an orthogonal waveform needs T >= Nt, got T={t_samples}, Nt={nt}")
    return np.eye(t_samples, nt, dtype=complex) / np.sqrt(nt)


def full_column_rank(s: np.ndarray, tol: float = 1e-10) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = np.atleast_2d(s)
    sv = np.linalg.svd(s, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return False
    return int(np.sum(sv > tol * sv[0])) == s.shape[1]


def noiseless_response(tx: SensorArray, rx: SensorArray, s: np.ndarray,
                       omega: float, gamma: complex = 1.0) -> np.ndarray:
    """``(S kron I) a_tr(omega) * gamma`` without forming the Kronecker matrix."""
    s = np.atleast_2d(s)
    if s.shape[1] != len(tx):
        raise DimensionError(
            f"waveform has {s.shape[1]} columns but there are {len(tx)} transmitters")
    return np.kron(s @ steering(tx, omega), steering(rx, omega)) * gamma


def complex_noise(rng: np.random.Generator, size, sigma2: float) -> np.ndarray:
    """Circularly symmetric complex normal with per-entry variance ``sigma2``."""
    g = rng.standard_normal((2,) + tuple(np.atleast_1d(size)))
    return (g[0] + 1j * g[1]) * np.sqrt(sigma2 / 2)


def synthesize(tx: SensorArray, rx: SensorArray, s: np.ndarray, omega: float,
               gamma: complex, sigma2: float,
               rng_seed: int | np.random.Generator) -> Measurement:
    """Draw one noisy measurement.

    ``rng_seed`` is either an integer seed (fed to ``PCG64``) or an already
    constructed generator.
    """
    if sigma2 < 0:
        raise ValueError(f"noise power must be nonnegative, got {sigma2}")
    s = np.atleast_2d(np.asarray(s, dtype=complex))
    clean = noiseless_response(tx, rx, s, omega, gamma)
    rng = (rng_seed if isinstance(rng_seed, np.random.Generator)
           else np.random.Generator(np.random.PCG64(rng_seed)))
    y = clean + complex_noise(rng, clean.shape[0], sigma2)
    return Measurement(y=y, omega=float(omega), gamma=complex(gamma),
                       sigma2=float(sigma2), n_rx=len(rx), t_samples=s.shape[0])
