"""Numeric checks of the two feasibility inequalities behind the t >= 30 guarantee.

The permutation inequality is evaluated in log space with log-gamma, since
n = 2^30 makes the raw terms unrepresentable. The swap-phase margin is linear
in n and is evaluated exactly over the dyadic rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

MAX_T = 64


class DegenerateParameters(ValueError):
    """A factorial argument fell below 1."""


@dataclass(frozen=True)
class BoundsParams:
    alpha: Fraction
    gamma: Fraction
    kappa: Fraction
    epsilon: Fraction
    theta: Fraction

    def __post_init__(self):
        for name in ("alpha", "gamma", "kappa", "epsilon", "theta"):
            value = Fraction(getattr(self, name))
            object.__setattr__(self, name, value)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.alpha + 2 * self.gamma >= 1:
            raise ValueError("need alpha + 2 * gamma < 1")

    @classmethod
    def asymptotic(cls) -> "BoundsParams":
        return cls(
            alpha=1 - Fraction(38, 2**25),
            gamma=Fraction(1, 2**25),
            kappa=Fraction(6, 2**25),
            epsilon=Fraction(1, 2**6),
            theta=Fraction(1, 2**12),
        )


def _logsumexp(a: float, b: float) -> float:
    hi = max(a, b)
    return hi + math.log(math.exp(a - hi) + math.exp(b - hi))


def lemma1_terms_log(params: BoundsParams, t: int) -> tuple[float, float]:
    """Natural logs of the two summands of the permutation-phase inequality at n = 2^t."""
    n = 2**t
    kn = params.kappa * n
    gn = params.gamma * n
    rest = (1 - params.alpha - 2 * params.gamma) * n / 3
    if kn < 1 or rest < 1:
        raise DegenerateParameters(f"factorial argument below 1 at t={t} (kappa*n={float(kn)}, rest={float(rest)})")
    log_n = t * math.log(2)
    first = math.log(7) + 2 * log_n + float(kn) * math.log(gn) - math.lgamma(float(kn) + 1)
    second = math.log(3) + 3 * log_n + float(rest) * math.log(2 * gn) - math.lgamma(float(rest) + 1)
    return first, second


def lemma1_lhs_log(params: BoundsParams, t: int) -> float:
    """log of 7n^2 (gn)^(kn)/(kn)! + 3n^3 (2gn)^r/r!, r = (1-a-2g)n/3; negative iff the inequality holds."""
    return _logsumexp(*lemma1_terms_log(params, t))


def lemma2_margin(params: BoundsParams, n: int) -> Fraction:
    """Exact value of the swap-phase margin; positive iff its hypothesis holds."""
    a, k, e, th = params.alpha, params.kappa, params.epsilon, params.theta
    coef = a - 21 * k - 7 * e - 84 * k / e - 21 * th / e - 80 * k / th
    return coef * n - 28


def lemma2_margin_float(params: BoundsParams, n: int) -> float:
    """Same margin in floating point, term by term."""
    a, k, e, th = (float(x) for x in (params.alpha, params.kappa, params.epsilon, params.theta))
    n = float(n)
    return a * n - 21 * k * n - 7 * e * n - (84 * k / e) * n - (21 * th / e) * n - (80 * k / th) * n - 28


@dataclass(frozen=True)
class Feasibility:
    t: int
    lemma1_log: float | None
    lemma2_margin: Fraction
    lemma1_ok: bool
    lemma2_ok: bool

    @property
    def ok(self) -> bool:
        return self.lemma1_ok and self.lemma2_ok

    def line(self) -> str:
        l1 = "degenerate" if self.lemma1_log is None else f"{self.lemma1_log:.6f}"
        return (
            f"t={self.t} lemma1_log={l1} lemma2_margin={float(self.lemma2_margin):.6f} "
            f"feasible={'yes' if self.ok else 'no'}"
        )


def evaluate(t: int, params: BoundsParams) -> Feasibility:
    n = 2**t
    try:
        l1 = lemma1_lhs_log(params, t)
    except DegenerateParameters:
        l1 = None
    margin = lemma2_margin(params, n)
    return Feasibility(
        t=t,
        lemma1_log=l1,
        lemma2_margin=margin,
        lemma1_ok=l1 is not None and l1 < 0,
        lemma2_ok=margin > 0 and params.epsilon * n >= 3,
    )


def feasible(t: int, params: BoundsParams) -> tuple[bool, bool]:
    f = evaluate(t, params)
    return f.lemma1_ok, f.lemma2_ok


def scan(params: BoundsParams, t_max: int) -> list[Feasibility]:
    if not 1 <= t_max <= MAX_T:
        raise ValueError(f"t_max must lie in [1, {MAX_T}]")
    return [evaluate(t, params) for t in range(1, t_max + 1)]


def scan_min_t(params: BoundsParams, t_max: int) -> int | None:
    return next((f.t for f in scan(params, t_max) if f.ok), None)
