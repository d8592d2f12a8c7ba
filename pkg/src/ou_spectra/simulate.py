"""Exact-discretization sampling of the diffusion and Monte Carlo pairings.

One transition step over time h is x -> e^(hB) x + xi with xi drawn from the
exact time-h covariance, so the sampled law has no step-size bias and the
statistical tolerance is the only error source. Every path owns a
counter-based RNG stream derived from (seed, path index); results are
byte-identical for a fixed config no matter how many workers run.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CholeskyFailure, UsageError
from .model import OUModel, covariance_at, matrix_exponential
from .polynomials import SparsePolynomial

_CHUNK = 8192  # paths per work unit; fixed so chunking never depends on worker count
BURN_IN_DECAY = 1e-6


@dataclass(frozen=True)
class SimConfig:
    model: OUModel
    step: float
    paths: int
    seed: int
    burn_in: int | None = None  # None: smallest m with ||e^(m h B)||_2 < 1e-6

    def __post_init__(self):
        if not (self.step > 0):
            raise ValueError("step must be positive")
        if self.paths < 1 or (self.burn_in is not None and self.burn_in < 1):
            raise ValueError("paths and burn_in must be positive")

    def resolved_burn_in(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return default_burn_in(self.model, self.step)


@dataclass(frozen=True)
class Ensemble:
    samples: np.ndarray  # (paths, N)
    config: SimConfig
    provenance: str  # hash of the fully resolved config

    @property
    def paths(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class PairingEstimate:
    estimate: float
    std_error: float
    paths: int


def default_burn_in(model: OUModel, h: float, decay: float = BURN_IN_DECAY) -> int:
    """Smallest step count m with spectral norm ||e^(m h B)|| below the decay
    target."""
    E = matrix_exponential(model.B, h)
    power = np.eye(model.dim)
    for m in range(1, 1_000_000):
        power = power @ E
        if np.linalg.norm(power, 2) < decay:
            return m
    raise RuntimeError("burn-in search did not terminate; drift decays too slowly")


def config_digest(config: SimConfig) -> str:
    payload = {
        "Q": config.model.Q.tolist(),
        "B": config.model.B.tolist(),
        "step": config.step,
        "paths": config.paths,
        "seed": config.seed,
        "burn_in": config.resolved_burn_in(),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def transition_maps(model: OUModel, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(e^(hB), Cholesky factor of the time-h covariance)."""
    E = matrix_exponential(model.B, h)
    sigma = covariance_at(model, h).sigma
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as e:
        raise CholeskyFailure(f"time-{h} covariance is not positive definite: {e}") from e
    return E, L


def sample_transition(model: OUModel, h: float, x, rng: np.random.Generator) -> np.ndarray:
    """One exact transition from state x (a vector or a (m, N) block)."""
    E, L = transition_maps(model, h)
    x = np.asarray(x, dtype=float)
    noise = rng.standard_normal(x.shape)
    return x @ E.T + noise @ L.T if x.ndim == 2 else E @ x + L @ noise


def _path_generator(seed: int, path: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=np.array([seed & 0xFFFFFFFFFFFFFFFF, path], dtype=np.uint64))
    )


def worker_count() -> int:
    """Worker cap from OU_SPECTRA_THREADS (0 or unset: automatic)."""
    raw = os.environ.get("OU_SPECTRA_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"OU_SPECTRA_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise UsageError("OU_SPECTRA_THREADS must be >= 0")
    return n or min(4, os.cpu_count() or 1)


def stationary_ensemble(config: SimConfig) -> Ensemble:
    """Draw one near-stationary sample per path.

    Each path starts at the origin and runs burn_in exact transitions, so its
    law is exactly N(0, Q_(m h)), within ||e^(m h B)||^2 of the stationary
    covariance. The per-path streams make the result independent of chunk
    scheduling.
    """
    model = config.model
    m = config.resolved_burn_in()
    E, L = transition_maps(model, config.step)
    ET, LT = E.T.copy(), L.T.copy()
    n, dim = config.paths, model.dim
    out = np.empty((n, dim))

    def run_chunk(lo: int, hi: int):
        states = np.zeros((hi - lo, dim))
        noise = np.empty((hi - lo, m, dim))
        for p in range(lo, hi):
            noise[p - lo] = _path_generator(config.seed, p).standard_normal((m, dim))
        for step in range(m):
            states = states @ ET + noise[:, step, :] @ LT
        out[lo:hi] = states

    chunks = [(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]
    workers = worker_count()
    if workers <= 1 or len(chunks) == 1:
        for lo, hi in chunks:
            run_chunk(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda c: run_chunk(*c), chunks))
    return Ensemble(samples=out, config=config, provenance=config_digest(config))


def estimate_pairing(
    ensemble: Ensemble, p: SparsePolynomial, q: SparsePolynomial
) -> PairingEstimate:
    """Sample mean of p(x) * conj(q(x)) with a jackknife standard error."""
    X = ensemble.samples
    vals = p.evaluate_rows(X) * np.conj(q.evaluate_rows(X))
    n = vals.shape[0]
    total = vals.sum()
    est = total / n
    if n == 1:
        return PairingEstimate(float(np.real(est)), math.inf, 1)
    loo = (total - vals) / (n - 1)
    var = (n - 1) / n * np.sum(np.abs(loo - loo.mean()) ** 2)
    return PairingEstimate(float(np.real(est)), float(math.sqrt(var)), n)


# -- persistence -------------------------------------------------------------


def save_ensemble(ensemble: Ensemble, path: str) -> dict:
    """Write little-endian float64 row-major samples plus a JSON sidecar."""
    data = np.ascontiguousarray(ensemble.samples, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(data.tobytes())
    sidecar = {
        "paths": int(ensemble.samples.shape[0]),
        "dim": int(ensemble.samples.shape[1]),
        "dtype": "<f8",
        "layout": "row-major",
        "step": ensemble.config.step,
        "seed": ensemble.config.seed,
        "burn_in": ensemble.config.resolved_burn_in(),
        "Q": ensemble.config.model.Q.tolist(),
        "B": ensemble.config.model.B.tolist(),
        "config_sha256": ensemble.provenance,
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    return sidecar


def load_ensemble_samples(path: str) -> tuple[np.ndarray, dict]:
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    raw = np.fromfile(path, dtype="<f8")
    samples = raw.reshape(sidecar["paths"], sidecar["dim"])
    return samples, sidecar


def ensemble_to_csv(ensemble: Ensemble, path: str):
    np.savetxt(
        path,
        ensemble.samples,
        delimiter=",",
        header=",".join(f"x{i + 1}" for i in range(ensemble.samples.shape[1])),
        comments="",
    )
