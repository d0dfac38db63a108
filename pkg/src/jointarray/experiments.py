"""Monte Carlo MSE-versus-SNR sweeps and the four reference geometries.

Per-trial noise comes from ``PCG64`` seeded by
``SeedSequence(master_seed, spawn_key=(snr_index, trial_index))``, so every
trial draws the same numbers whatever the execution order or worker count.
Trials are processed in fixed-size chunks and reduced over the full
per-trial error vector, which keeps the output byte-identical across runs.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .crb import crb_general, snr_to_sigma2
from .estimator import GridMle, MleConfig, check_grid_resolution, wrap_error
from .geometry import (SensorArray, beamforming_condition, canonical_mimo,
                       clustered_array, optimal_tx_array, ula)
from .signal import noiseless_response, optimal_waveform, orthogonal_waveform

CSV_HEADER = ("snr_db", "sigma2", "crb", "mse", "trials", "mean_bias")
CHUNK_TRIALS = 500
DEFAULT_SNR_GRID = tuple(float(x) for x in range(-20, 21, 2))


class ConfigError(ValueError):
    """Scenario configuration is invalid or infeasible."""


@dataclass(frozen=True)
class ScenarioConfig:
    tx: SensorArray
    rx: SensorArray
    waveform: str | np.ndarray = "optimal"
    omega: float = 0.0
    gamma: complex = 1.0
    snr_grid_db: tuple[float, ...] = DEFAULT_SNR_GRID
    trials: int = 10_000
    mle: MleConfig = field(default_factory=MleConfig)
    master_seed: int = 0
    t_samples: int | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if len(self.snr_grid_db) == 0:
            raise ConfigError("SNR grid is empty")
        if isinstance(self.waveform, str):
            if self.waveform not in ("optimal", "orthogonal"):
                raise ConfigError(f"unknown waveform spec {self.waveform!r}")
            if self.waveform == "optimal" and not beamforming_condition(self.tx, self.rx):
                raise ConfigError(
                    "optimal (beamforming) waveform requires chi_rx > chi_tx; "
                    f"violated for tx={self.tx}, rx={self.rx}")
        elif np.atleast_2d(self.waveform).shape[1] != len(self.tx):
            raise ConfigError("explicit waveform column count differs from Nt")

    def waveform_matrix(self) -> np.ndarray:
        if isinstance(self.waveform, str):
            if self.waveform == "optimal":
                return optimal_waveform(self.tx, self.omega, self.t_samples)
            return orthogonal_waveform(len(self.tx), self.t_samples)
        return np.atleast_2d(np.asarray(self.waveform, dtype=complex))

    def waveform_label(self) -> str:
        return self.waveform if isinstance(self.waveform, str) else "explicit"


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    sigma2: float
    crb: float
    mse: float
    trials: int
    mean_bias: float
    mse_stderr: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict[str, str]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def row_at(self, snr_db: float) -> SweepRow:
        for r in self.rows:
            if r.snr_db == snr_db:
                return r
        raise KeyError(snr_db)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([repr(r.snr_db), repr(r.sigma2), repr(r.crb), repr(r.mse),
                        str(r.trials), repr(r.mean_bias)])
        return buf.getvalue()

    def metadata_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.metadata.items())

    def write(self, path) -> Path:
        """Write the CSV and a ``<path>.meta`` sidecar; returns the sidecar path."""
        path = Path(path)
        path.write_text(self.to_csv())
        meta = path.with_name(path.name + ".meta")
        meta.write_text(self.metadata_text())
        return meta


def trial_generator(master_seed: int, snr_index: int, trial_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(snr_index, trial_index))
    return np.random.Generator(np.random.PCG64(ss))


def _trial_noise(master_seed, snr_index, start, stop, length):
    out = np.empty((stop - start, length), dtype=complex)
    for row, k in enumerate(range(start, stop)):
        g = trial_generator(master_seed, snr_index, k).standard_normal((2, length))
        out[row] = g[0] + 1j * g[1]
    return out


def _chunk_errors(mle, clean, omega, sigma2, master_seed, snr_index, start, stop):
    noise = _trial_noise(master_seed, snr_index, start, stop, clean.shape[0])
    ys = clean + noise * math.sqrt(sigma2 / 2)
    return wrap_error(mle.estimate_batch(ys), omega)


def run_sweep(cfg: ScenarioConfig, workers: int = 1, check_grid: bool = True) -> SweepResult:
    """Monte Carlo MSE of the grid MLE and the CRB at every SNR of ``cfg``."""
    s = cfg.waveform_matrix()
    mle = GridMle(cfg.tx, cfg.rx, s, cfg.mle)
    clean = noiseless_response(cfg.tx, cfg.rx, s, cfg.omega, cfg.gamma)
    snrs = sorted(cfg.snr_grid_db)

    rows = []
    crbs = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for i, snr in enumerate(snrs):
            sigma2 = snr_to_sigma2(snr, cfg.gamma)
            crb = crb_general(cfg.tx, cfg.rx, s, cfg.omega, cfg.gamma, sigma2).value
            crbs.append(crb)
            bounds = [(a, min(a + CHUNK_TRIALS, cfg.trials))
                      for a in range(0, cfg.trials, CHUNK_TRIALS)]
            parts = pool.map(
                lambda b: _chunk_errors(mle, clean, cfg.omega, sigma2,
                                        cfg.master_seed, i, *b), bounds)
            err = np.concatenate(list(parts))
            sq = err ** 2
            mse = float(np.mean(sq))
            stderr = float(np.std(sq) / math.sqrt(cfg.trials))
            rows.append(SweepRow(float(snr), float(sigma2), float(crb), mse, cfg.trials,
                                 float(np.mean(err)), stderr))

    qmse = float("nan")
    if check_grid:
        qmse = check_grid_resolution(mle, cfg.omega, min(crbs))

    meta = {
        "name": cfg.name,
        "tx": str(cfg.tx),
        "rx": str(cfg.rx),
        "waveform": cfg.waveform_label(),
        "t_samples": str(s.shape[0]),
        "omega": repr(cfg.omega),
        "gamma": repr(complex(cfg.gamma)),
        "master_seed": str(cfg.master_seed),
        "trials": str(cfg.trials),
        "grid_points": str(cfg.mle.grid_points),
        "refinement": cfg.mle.refinement,
        "search_interval": f"{cfg.mle.search_interval[0]!r},{cfg.mle.search_interval[1]!r}",
        "quantization_mse": repr(qmse),
        "rng": "numpy PCG64 via SeedSequence(master_seed, spawn_key=(snr_index, trial_index))",
        "version": __version__,
    }
    return SweepResult(rows, meta)


# Reference geometries with Nt=4, Nr=6.
FIG3_NT, FIG3_NR, FIG3_APERTURE = 4, 6, 14


def preset(name: str, **overrides) -> ScenarioConfig:
    """Scenario for one of ``fig3a`` .. ``fig3d``.

    (a) clustered receive array with the dilated transmit ULA, (b) an
    alternative receive array of identical spatial variance, (c) plain ULAs,
    (d) the canonical nested MIMO array.
    """
    tx_a = optimal_tx_array(FIG3_NT, FIG3_NR)
    geometries = {
        "fig3a": (tx_a, clustered_array(FIG3_NR, FIG3_APERTURE)),
        "fig3b": (tx_a, SensorArray([0, 7, 9, 11, 13, 20])),
        "fig3c": (ula(FIG3_NT), ula(FIG3_NR)),
        "fig3d": canonical_mimo(FIG3_NT, FIG3_NR),
    }
    if name not in geometries:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(geometries)}")
    tx, rx = geometries[name]
    base = ScenarioConfig(tx=tx, rx=rx, t_samples=FIG3_NT, name=name)
    return replace(base, **overrides)


def fig3_suite(master_seed: int = 0, trials: int = 10_000,
               snr_grid_db: Sequence[float] = DEFAULT_SNR_GRID,
               mle: MleConfig | None = None, workers: int = 1) -> dict[str, SweepResult]:
    out = {}
    for name in ("fig3a", "fig3b", "fig3c", "fig3d"):
        cfg = preset(name, master_seed=master_seed, trials=trials,
                     snr_grid_db=tuple(snr_grid_db), mle=mle or MleConfig())
        out[name] = run_sweep(cfg, workers=workers)
    return out
