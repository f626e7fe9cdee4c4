"""Empirical-CDF training set, MSE loss over the evolution, CMA-ES fit."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cmaes import CMAES, default_popsize
from .evolution import EvolutionConfig, expectation_trajectories
from .schedule import DEFAULT_TOTAL_TIME, POSITIVE_EPS, ScheduleParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AffineTransform:
    x_min: float
    x_max: float

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.x_min) / self.width

    def inverse(self, t):
        return self.x_min + np.asarray(t, dtype=float) * self.width


@dataclass
class TrainingSet:
    taus: np.ndarray
    F: np.ndarray
    transform: AffineTransform
    n_sample: int
    indices: np.ndarray  # evolution-grid index of every tau

    @property
    def n_train(self) -> int:
        return len(self.taus)


def rescale(sample):
    """Min-max map of ``sample`` onto [0, 1]."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2 or not np.all(np.isfinite(x)):
        raise ValueError("sample needs at least two finite values")
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        raise ValueError("sample is constant, cannot rescale")
    tr = AffineTransform(lo, hi)
    return np.clip(tr.forward(x), 0.0, 1.0), tr


def empirical_cdf(normalized, n_train: int, dtau: float = 0.002,
                  transform: AffineTransform | None = None) -> TrainingSet:
    """Cumulative histogram at ``n_train`` equispaced bin edges ``j / n_train``.

    Each edge is snapped to the nearest step of the evolution grid before
    counting, so labels line up with recorded trajectory points.
    """
    x = np.sort(np.asarray(normalized, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("empty sample")
    if x[0] < 0.0 or x[-1] > 1.0:
        raise ValueError("sample must be normalised to [0, 1]")
    n_steps = int(round(1.0 / dtau))
    if n_train < 2:
        raise ValueError("n_train must be at least 2")
    if n_train > n_steps:
        raise ValueError(f"n_train={n_train} exceeds the {n_steps} evolution steps")
    raw = np.arange(1, n_train + 1) / n_train
    idx = np.rint(raw * n_steps).astype(int)
    taus = idx / n_steps
    F = np.searchsorted(x, taus, side="right") / x.size
    if transform is None:
        transform = AffineTransform(0.0, 1.0)
    return TrainingSet(taus, F, transform, int(x.size), idx)


def training_set_from_model(params: ScheduleParams, n_train: int,
                            cfg: EvolutionConfig = EvolutionConfig()) -> TrainingSet:
    """Labels produced by the model itself (a target the fit can reach exactly)."""
    n_steps = cfg.n_steps
    idx = np.rint(np.arange(1, n_train + 1) / n_train * n_steps).astype(int)
    z = expectation_trajectories(np.array(params.theta), params.total_time, cfg)[0]
    return TrainingSet(idx / n_steps, z[idx], AffineTransform(0.0, 1.0), 0, idx)


def batch_loss(thetas: np.ndarray, ts: TrainingSet, total_time: float,
               cfg: EvolutionConfig) -> np.ndarray:
    z = expectation_trajectories(thetas, total_time, cfg)
    return np.mean((ts.F[None, :] - z[:, ts.indices]) ** 2, axis=1)


def loss(params: ScheduleParams, ts: TrainingSet, cfg: EvolutionConfig = EvolutionConfig()) -> float:
    """Mean squared error between the labels and ``<Z>`` at the bin times."""
    return float(batch_loss(np.array(params.theta), ts, params.total_time, cfg)[0])


@dataclass
class OptimizerConfig:
    popsize: int | None = None
    sigma0: float = 0.3
    max_iters: int = 10_000
    j_thresh: float = 1e-5
    seed: int = 0


@dataclass
class FitResult:
    params: ScheduleParams
    j_final: float
    iterations: int
    seed: int
    stop_reason: str
    dtau: float
    stepper: str
    n_train: int
    j_thresh: float
    transform: AffineTransform = field(default_factory=lambda: AffineTransform(0.0, 1.0))
    trace: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.j_final <= self.j_thresh

    @property
    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(self.dtau, self.stepper)

    def to_dict(self) -> dict:
        return {
            "theta": list(self.params.theta),
            "p": self.params.p,
            "T": self.params.total_time,
            "dtau": self.dtau,
            "stepper": self.stepper,
            "N_train": self.n_train,
            "J_thresh": self.j_thresh,
            "J_final": self.j_final,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "seed": self.seed,
            "transform": asdict(self.transform),
            "trace": list(self.trace),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        try:
            theta = tuple(float(t) for t in d["theta"])
            if len(theta) != int(d["p"]):
                raise ValueError("theta length does not match p")
            return cls(
                params=ScheduleParams(theta, float(d["T"])),
                j_final=float(d["J_final"]),
                iterations=int(d["iterations"]),
                seed=int(d["seed"]),
                stop_reason=str(d.get("stop_reason", "")),
                dtau=float(d["dtau"]),
                stepper=str(d.get("stepper", "exact")),
                n_train=int(d["N_train"]),
                j_thresh=float(d.get("J_thresh", 1e-5)),
                transform=AffineTransform(**d["transform"]),
                trace=[float(v) for v in d.get("trace", [])],
            )
        except KeyError as exc:
            raise ValueError(f"fit result is missing field {exc}") from None

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "FitResult":
        return cls.from_dict(json.loads(Path(path).read_text()))


def initial_raw(p: int, seed: int) -> np.ndarray:
    """Starting raw vector, i.i.d. uniform on [0.5, 1.5]."""
    return np.random.default_rng([seed, 0]).uniform(0.5, 1.5, p)


def fit(ts: TrainingSet, p: int, cfg: EvolutionConfig = EvolutionConfig(),
        opt: OptimizerConfig = OptimizerConfig(),
        total_time: float = DEFAULT_TOTAL_TIME) -> FitResult:
    """Minimise the loss over ``p`` schedule coefficients with CMA-ES.

    The search runs over unconstrained raw vectors that are squared into
    positive coefficients. Returns the best candidate ever evaluated.
    """
    if p < 1:
        raise ValueError("degree p must be at least 1")
    if p > cfg.n_steps:
        raise ValueError(f"degree p={p} exceeds the {cfg.n_steps} evolution steps")
    es = CMAES(initial_raw(p, opt.seed), opt.sigma0,
               popsize=opt.popsize or default_popsize(p), seed=opt.seed)

    def objective(raw):
        return batch_loss(project_positive_batch(raw), ts, total_time, cfg)

    res = es.minimize(objective, target=opt.j_thresh, max_iters=opt.max_iters)
    params = ScheduleParams.from_raw(res.xbest, total_time)
    log.info("fit finished: J=%.3e after %d generations (%s)", res.fbest, res.iterations, res.stop_reason)
    return FitResult(
        params=params,
        j_final=res.fbest,
        iterations=res.iterations,
        seed=opt.seed,
        stop_reason=res.stop_reason,
        dtau=cfg.dtau,
        stepper=cfg.stepper,
        n_train=ts.n_train,
        j_thresh=opt.j_thresh,
        transform=ts.transform,
        trace=res.trace,
    )


def project_positive_batch(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    return raw * raw + POSITIVE_EPS
