"""Critical parameter bundle for the q>4 self-dual point.

All model parameters are functions of a single q > 4:

    p   = sqrt(q)/(1+sqrt(q))             critical bond density
    lam > 0 with e^lam + e^-lam = sqrt(q)
    c   = e^{lam/2} + e^{-lam/2}          bulk six-vertex weight (c > 2)
    c_b = e^{lam/2}                       boundary six-vertex weight
    J, U with coth(2J) = c, sinh(2J) = e^{-2U}, 0 < J < U

plus the Ashkin-Teller edge weights w_tau, w_tautau and the quasi-free /
quasi-wired boundary cluster weights e^{±lam} sqrt(q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CriticalParams:
    q: float
    p: float
    lam: float
    c: float
    c_b: float
    J: float
    U: float
    w_tau: float
    w_tautau: float
    qb_free: float
    qb_wired: float

    @property
    def sqrt_q(self) -> float:
        return math.sqrt(self.q)

    @property
    def beta(self) -> float:
        """Inverse critical temperature 1/T_c = ln(1 + sqrt(q))."""
        return math.log(1.0 + self.sqrt_q)

    def validate(self, tol: float = 1e-12) -> None:
        """Check every algebraic relation among the fields."""
        q, p, lam, c, c_b = self.q, self.p, self.lam, self.c, self.c_b
        rels = [
            (p, math.sqrt(q) / (1.0 + math.sqrt(q))),
            (math.sqrt(q), math.exp(lam) + math.exp(-lam)),
            (c, math.exp(lam / 2) + math.exp(-lam / 2)),
            (c * c, math.sqrt(q) + 2.0),
            (c, 1.0 / math.tanh(2.0 * self.J)),
            (math.sinh(2.0 * self.J), math.exp(-2.0 * self.U)),
            (c_b, math.exp(lam / 2)),
            (self.w_tau, math.exp(2 * self.U) * (math.exp(2 * self.J) - math.exp(-2 * self.J))),
            (self.w_tautau, math.exp(2 * (self.U - self.J)) - 1.0),
            (self.qb_free, math.exp(lam) * math.sqrt(q)),
            (self.qb_wired, math.exp(-lam) * math.sqrt(q)),
        ]
        for got, want in rels:
            if abs(got - want) > tol * max(1.0, abs(want)):
                raise ValueError(f"parameter relation violated: {got} vs {want}")
        if not (self.U > self.J > 0.0):
            raise ValueError("expected U > J > 0")
        if not (c > 2.0 and lam > 0.0 and c_b > 1.0):
            raise ValueError("expected c > 2, lam > 0, c_b > 1")


def params_from_q(q: float) -> CriticalParams:
    """Solve all parameter relations in closed form for one q > 4."""
    if q <= 4.0:
        raise ValueError(f"q must exceed 4 (lam degenerates at q=4); got q={q}")
    sq = math.sqrt(q)
    p = sq / (1.0 + sq)
    # e^lam is the larger root of x + 1/x = sqrt(q)
    lam = math.log((sq + math.sqrt(q - 4.0)) / 2.0)
    c = math.exp(lam / 2.0) + math.exp(-lam / 2.0)
    c_b = math.exp(lam / 2.0)
    # coth(2J) = c  <=>  tanh(2J) = 1/c
    J = 0.5 * math.atanh(1.0 / c)
    U = -0.5 * math.log(math.sinh(2.0 * J))
    w_tau = math.exp(2.0 * U) * (math.exp(2.0 * J) - math.exp(-2.0 * J))
    w_tautau = math.exp(2.0 * (U - J)) - 1.0
    out = CriticalParams(
        q=q,
        p=p,
        lam=lam,
        c=c,
        c_b=c_b,
        J=J,
        U=U,
        w_tau=w_tau,
        w_tautau=w_tautau,
        qb_free=math.exp(lam) * sq,
        qb_wired=math.exp(-lam) * sq,
    )
    out.validate()
    return out
