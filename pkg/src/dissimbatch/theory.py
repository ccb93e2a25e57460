"""Closed-form quantities: growth scales, survival factor, Chernoff tails, LLL checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, Decimal, localcontext
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class TheoryParams:
    n: int
    d: int
    r_n: float
    p0: float  # probability that a point is corrupted
    p_up: float
    p_low: float
    cat_size: int

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.cat_size < 1:
            raise ValueError("n, d and cat_size must be positive")
        if self.r_n < 0:
            raise ValueError("r_n must be non-negative")
        if not (0.0 <= self.p0 <= 1.0):
            raise ValueError("p0 must lie in [0, 1]")
        if not (0 < self.p_low <= 1 and 0 < self.p_up <= 1):
            raise ValueError("p_low and p_up must lie in (0, 1]")
        tol = 1e-12
        if not (self.p_low <= 1.0 / self.cat_size + tol and 1.0 / self.cat_size <= self.p_up + tol):
            raise ValueError("need p_low <= 1/cat_size <= p_up")


@dataclass
class BoundReport:
    """Growth scales plus empirically fitted constant bands.

    The fitted fields stay ``None`` until a harness fit fills them in.
    """

    delta: float
    lambda_: float
    zeta: float = 1.0
    gamma_hat: Optional[tuple] = None
    lambda_hat: Optional[tuple] = None
    beta_hat: Optional[float] = None
    c_hat: Optional[float] = None
    pred_degree_range: Optional[tuple] = None
    pred_tau_range: Optional[tuple] = None
    pred_nsim_range: Optional[tuple] = None
    diagnostics: Optional[dict] = None


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def delta_lambda(p: TheoryParams) -> tuple[float, float]:
    geo = p.r_n**p.d * (1.0 - p.p0)
    delta = p.n * p.p_up * max(geo, p.p0)
    if p.p0 > 0:
        lam = p.n * p.p_up * min(geo, p.p0)
    else:
        lam = delta
    return delta, lam


def zeta(p: TheoryParams, k: int, eps_up: float, cat_probs: Sequence[float]) -> float:
    """Mean over symbols of ``exp(-eps_up * pi_d * n * r^d * p(y) / k)``."""
    probs = np.asarray(cat_probs, dtype=float)
    if k < 1:
        raise ValueError("k must be >= 1")
    if eps_up <= 0:
        raise ValueError("eps_up must be positive")
    if probs.ndim != 1 or probs.size == 0 or (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("cat_probs must be a probability vector")
    scale = eps_up * unit_ball_volume(p.d) * p.n * p.r_n**p.d / k
    return float(np.mean(np.exp(-scale * probs)))


def admit_probability_bound(n: int, d: int, r_n: float, eps_up: float, cat_probs: Sequence[float]) -> float:
    """Lower bound on the chance the n-th point has no similar predecessor."""
    probs = np.asarray(cat_probs, dtype=float)
    theta = np.minimum(eps_up * unit_ball_volume(d) * r_n**d * probs, 1.0)
    return float(np.sum((1.0 - theta) ** (n - 1) * probs))


def chernoff_tail(theta: float, gamma: float) -> float:
    """``2 exp(-gamma^2 theta / 4)``; may exceed 1, returned as-is."""
    if not (0 < gamma <= 0.5):
        raise ValueError("gamma must lie in (0, 1/2]")
    if theta < 0:
        raise ValueError("theta must be non-negative")
    return 2.0 * math.exp(-(gamma**2) * theta / 4.0)


def chernoff_gamma(theta: float, alpha: float) -> float:
    """Smallest relative deviation whose Chernoff tail is at most ``alpha``.

    Returns 0.5 (the largest admissible value) when no gamma in range works.
    """
    if theta <= 0:
        return 0.5
    g = math.sqrt(4.0 * math.log(2.0 / alpha) / theta)
    return min(g, 0.5)


@dataclass(frozen=True)
class LLLCertificate:
    feasible: bool
    event_prob: float
    log_event_prob: float
    dependency_degree: int
    log_dependency: float
    crude_condition: bool


def lll_certificate(max_degree: int, k: int, q: int) -> LLLCertificate:
    """Symmetric local-lemma check for the random batch assignment.

    Bad event: k+1 mutually similar indices land in one of ``q`` batches,
    probability ``q^-k``. Each event shares a variable with at most
    ``(k+1) * L`` others, ``L = (max_degree * e / k)^k``. Feasible when
    ``e * p * (D + 1) <= 1``. ``crude_condition`` is the cruder
    ``(max_degree * e / (k q))^k <= 1 / (4k)``.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > max_degree:
        raise ValueError("k must not exceed max_degree")
    log_p = -k * math.log(q)
    log_l = k * (math.log(max_degree) + 1.0 - math.log(k))
    log_dep = math.log(k + 1) + log_l
    # log(D + 1) without overflow
    log_dep1 = log_dep + math.log1p(math.exp(-log_dep))
    feasible = 1.0 + log_p + log_dep1 <= 0.0
    crude = k * (math.log(max_degree) + 1.0 - math.log(k) - math.log(q)) <= -math.log(4 * k)
    with localcontext() as ctx:
        ctx.prec = 40
        dep_int = int(Decimal(log_dep).exp().to_integral_value(rounding=ROUND_CEILING))
    return LLLCertificate(
        feasible=feasible,
        event_prob=math.exp(log_p),
        log_event_prob=log_p,
        dependency_degree=dep_int,
        log_dependency=log_dep,
        crude_condition=crude,
    )


def min_feasible_q(max_degree: int, k: int) -> int:
    """Smallest q >= 2 passing :func:`lll_certificate`."""
    log_dep = math.log(k + 1) + k * (math.log(max_degree) + 1.0 - math.log(k))
    log_dep1 = log_dep + math.log1p(math.exp(-log_dep))
    q = max(2, math.ceil(math.exp((1.0 + log_dep1) / k)) - 1)
    while not lll_certificate(max_degree, k, q).feasible:
        q += 1
    return q


def predicted_ranges(delta: float, k: int, cat_size: int, r_n: float, d: int, report: BoundReport) -> BoundReport:
    """Fill the predicted ranges from fitted constants already on ``report``."""
    if report.gamma_hat:
        g1, g2 = report.gamma_hat
        report.pred_degree_range = (g1 * delta, g2 * delta)
    if report.lambda_hat:
        l1, l2 = report.lambda_hat
        report.pred_tau_range = (l1 * delta / k, l2 * delta / k)
    if report.beta_hat is not None and report.c_hat is not None and r_n > 0:
        scale = k * cat_size / r_n**d
        report.pred_nsim_range = (report.beta_hat * scale * (1 - report.zeta), report.c_hat * scale)
    return report
