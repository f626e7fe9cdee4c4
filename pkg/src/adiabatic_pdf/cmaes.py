"""A small (mu/mu_w, lambda) CMA-ES minimiser.

Follows the standard rank-one + rank-mu update with cumulative step-size
adaptation. The objective receives a whole generation at once as an array
of shape ``(popsize, dim)`` and must return ``popsize`` losses; this keeps
vectorised objectives cheap and makes the evaluation order irrelevant.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)


class NonFiniteLossError(RuntimeError):
    pass


def default_popsize(dim: int) -> int:
    return 4 + int(math.floor(3.0 * math.log(dim)))


@dataclass
class CMAResult:
    xbest: np.ndarray
    fbest: float
    iterations: int
    evaluations: int
    stop_reason: str  # "target", "max_iters" or "stagnation"
    trace: list = field(default_factory=list)  # best-so-far loss per generation


class CMAES:
    """Ask/tell CMA-ES state.

    >>> es = CMAES(np.zeros(2), 0.5, seed=1)
    >>> res = es.minimize(lambda X: np.sum((X - 1) ** 2, axis=1), target=1e-10)
    >>> bool(res.fbest < 1e-10)
    True
    """

    def __init__(self, x0, sigma0: float, popsize: int | None = None, seed: int = 0):
        self.mean = np.array(x0, dtype=float)
        self.dim = n = self.mean.size
        if n < 1:
            raise ValueError("need at least one dimension")
        if sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        self.sigma = float(sigma0)
        self.lam = popsize or default_popsize(n)
        self.rng = np.random.default_rng(seed)

        self.mu = self.lam // 2
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights**2)

        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(
            1 - self.c1,
            2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff),
        )
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        self.chin = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

        self.pc = np.zeros(n)
        self.ps = np.zeros(n)
        self.B = np.eye(n)
        self.D = np.ones(n)
        self.C = np.eye(n)
        self.invsqrtC = np.eye(n)
        self.eigen_eval = 0
        self.counteval = 0
        self.generation = 0

    def ask(self) -> np.ndarray:
        z = self.rng.standard_normal((self.lam, self.dim))
        return self.mean + self.sigma * (z * self.D) @ self.B.T

    def tell(self, X: np.ndarray, f: np.ndarray) -> None:
        n = self.dim
        order = np.argsort(f, kind="stable")
        xsel = X[order[: self.mu]]
        old = self.mean
        self.mean = self.weights @ xsel
        self.counteval += len(f)
        self.generation += 1

        y = (self.mean - old) / self.sigma
        self.ps = (1 - self.cs) * self.ps + math.sqrt(
            self.cs * (2 - self.cs) * self.mueff
        ) * (self.invsqrtC @ y)
        norm_ps = np.linalg.norm(self.ps)
        hsig = norm_ps / math.sqrt(
            1 - (1 - self.cs) ** (2 * self.counteval / self.lam)
        ) / self.chin < 1.4 + 2 / (n + 1)
        self.pc = (1 - self.cc) * self.pc + hsig * math.sqrt(
            self.cc * (2 - self.cc) * self.mueff
        ) * y

        artmp = (xsel - old) / self.sigma
        self.C = (
            (1 - self.c1 - self.cmu) * self.C
            + self.c1
            * (np.outer(self.pc, self.pc) + (1 - hsig) * self.cc * (2 - self.cc) * self.C)
            + self.cmu * (artmp.T * self.weights) @ artmp
        )
        self.sigma *= math.exp((self.cs / self.damps) * (norm_ps / self.chin - 1))

        if self.counteval - self.eigen_eval > self.lam / (self.c1 + self.cmu) / n / 10:
            self.eigen_eval = self.counteval
            self.C = np.triu(self.C) + np.triu(self.C, 1).T
            evals, self.B = np.linalg.eigh(self.C)
            self.D = np.sqrt(np.maximum(evals, 1e-300))
            self.invsqrtC = (self.B / self.D) @ self.B.T

    def minimize(
        self,
        objective: Callable[[np.ndarray], np.ndarray],
        target: float = -np.inf,
        max_iters: int = 10_000,
        tolx: float = 1e-14,
        callback: Callable[["CMAES", float], None] | None = None,
    ) -> CMAResult:
        """Iterate until the best loss reaches ``target`` or ``max_iters`` generations pass.

        A generation whose step size has collapsed below ``tolx`` in every
        coordinate also stops the run (``stop_reason="stagnation"``).
        """
        xbest = self.mean.copy()
        fbest = np.inf
        trace = []
        reason = "max_iters"
        for _ in range(max_iters):
            X = self.ask()
            f = np.asarray(objective(X), dtype=float)
            if f.shape != (self.lam,):
                raise ValueError(f"objective returned shape {f.shape}, expected ({self.lam},)")
            if not np.all(np.isfinite(f)):
                bad = X[~np.isfinite(f)][0]
                raise NonFiniteLossError(
                    f"non-finite loss at generation {self.generation}, candidate {bad.tolist()}"
                )
            k = int(np.argmin(f))
            if f[k] < fbest:
                fbest = float(f[k])
                xbest = X[k].copy()
            self.tell(X, f)
            trace.append(fbest)
            if callback is not None:
                callback(self, fbest)
            if fbest <= target:
                reason = "target"
                break
            if self.sigma * np.max(self.D) < tolx:
                reason = "stagnation"
                break
        log.debug("cma-es stopped after %d generations: %s", self.generation, reason)
        return CMAResult(xbest, fbest, self.generation, self.counteval, reason, trace)
