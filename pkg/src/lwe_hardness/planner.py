"""Parameter planner for the LWE to Gaussian-cLWE reduction.

Given the target ``(n, k, beta, gamma, kappa)`` it derives every constant
the reduction needs, plus a desk-scale noise schedule, and evaluates the
parameter checklist. Preconditions on the inputs raise
:class:`PlanningError`. The checklist items are asymptotic statements and
are only recorded with their operands, because most cannot hold at laptop
scale.

Logarithms are natural except in the secret-entropy inequality, which is
stated in bits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import PlanningError
from .samplers import theta_bounds


@dataclass(frozen=True)
class Predicate:
    name: str
    passed: bool
    lhs: float
    rhs: float
    relation: str
    tier: str = "checklist"


@dataclass(frozen=True)
class ReductionPlan:
    n: int
    k: int
    beta: float
    gamma: float
    kappa: int
    m: int
    delta: float
    psi: float
    t: float
    l: float
    beta_prime: float
    q: int
    sigma_prime: float
    r: float
    T: float
    alpha: float
    sigma_tilde: float
    c_prime: float
    c_rejection: float
    c_sparsity: float
    c_sigma: float
    log_lambda: float
    slack: int
    lwe_noise: float
    widen_extra: float
    smoothing: float
    effective_noise: float
    final_noise: float
    max_ratio: float
    eps_ltf: float
    eps_relu: float
    lower_bound_ltf: str
    lower_bound_relu: str
    validity: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return all(p.passed for p in self.validity)

    def failed(self) -> list[Predicate]:
        return [p for p in self.validity if not p.passed]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["validity"] = [asdict(p) for p in self.validity]
        return d


def _check(name: str, passed: bool, lhs: float, rhs: float, relation: str,
           tier: str = "checklist") -> Predicate:
    return Predicate(name, bool(passed), float(lhs), float(rhs), relation, tier)


def implied_fact_eps(sigma: float, n: int) -> float:
    """Smallest eps with ``sigma >= sqrt(ln(2n(1 + 1/eps)) / pi)``."""
    arg = math.pi * sigma**2 - math.log(2 * n)
    if arg <= 0:
        return math.inf
    if arg > 700:
        return math.exp(-arg)
    return 1.0 / math.expm1(arg)


def _precondition(name: str, ok: bool, lhs, rhs, relation: str, message: str = ""):
    if not ok:
        raise PlanningError(name, message or f"got {lhs!r}")
    return _check(name, True, lhs, rhs, relation, tier="precondition")


def plan_parameters(n: int, k: int, beta: float, gamma: float, kappa: int, *,
                    m: int = 1_000_000, c_prime: float = 10.0, c_sparsity: float = 0.25,
                    c_sigma: float = 4.0, c_eps: float = 0.1) -> ReductionPlan:
    """Choose the reduction constants for target ``(n, k, beta, gamma, kappa)``.

    ``c_prime`` fixes the period ``T = 1/(c' sqrt(k ln n))``; the rejection
    constant is its reciprocal so that ``alpha = T``. ``m`` is the desk
    sample count that enters the slack terms.
    """
    pre = []
    pre.append(_precondition("beta in (0,1)", 0 < beta < 1, beta, 1, "in (0,1)"))
    pre.append(_precondition("gamma > 0", gamma > 0, gamma, 0, ">"))
    pre.append(_precondition("kappa is a positive integer",
                             float(kappa).is_integer() and kappa >= 1, kappa, 1, ">= (integer)"))
    pre.append(_precondition("n >= 3", float(n).is_integer() and n >= 3, n, 3, ">="))
    pre.append(_precondition("m >= 1", float(m).is_integer() and m >= 1, m, 1, ">="))
    pre.append(_precondition("k is a positive integer",
                             float(k).is_integer() and k >= 1, k, 1, ">= (integer)"))
    n, k, kappa, m = int(n), int(k), int(kappa), int(m)
    ln_n = math.log(n)
    pre.append(_precondition("k >= log^gamma n", k >= ln_n**gamma, k, ln_n**gamma, ">=",
                             f"k={k} is below log^gamma n={ln_n**gamma:.6g}"))
    pre.append(_precondition("k <= cn", k <= c_sparsity * n, k, c_sparsity * n, "<=",
                             f"k={k} exceeds c*n={c_sparsity * n:g} (c={c_sparsity:g})"))

    delta = (1.0 - beta) / 3.0
    psi = math.log(k) / math.log(ln_n)
    t = 1.0 + psi * (1.0 - delta)
    l = ln_n**t
    beta_prime = (1.0 + gamma * (1.0 - 2.0 * delta)) / (1.0 + gamma * (1.0 - delta))
    q = k ** (kappa + 1)
    sigma_prime = c_sigma * math.sqrt(l)
    r = math.sqrt(k)
    T = 1.0 / (c_prime * math.sqrt(k * ln_n))
    c_rej = 1.0 / c_prime
    alpha = c_rej / (r * math.sqrt(ln_n))
    sigma_tilde = 1.0 / (r * alpha)

    # security parameter lambda = 2^(l^beta'); omega(log lambda) -> ceil(2 ln lambda)
    log_lambda = l**beta_prime * math.log(2.0)
    slack = int(math.ceil(2.0 * log_lambda))
    ln_m = math.log(m)

    widen_bound = math.sqrt(4.0 * ln_m + slack)
    lwe_noise = float(math.floor(widen_bound) + 1)
    widen_extra = widen_bound
    smoothing = 3.0 * math.sqrt(ln_n + ln_m + slack)
    effective = math.sqrt(lwe_noise**2 + widen_extra**2 + k * smoothing**2)
    final_noise = alpha * effective / q

    lo, hi = theta_bounds(sigma_tilde)
    max_ratio, min_ratio = hi**n, max(lo, 0.0) ** n
    eps_fact = implied_fact_eps(sigma_tilde, n)
    z_tail = math.erfc((T / 6) / (final_noise / math.sqrt(2 * math.pi)) / math.sqrt(2))

    chk = [
        _check("beta' in (0,1)", 0 < beta_prime < 1, beta_prime, 1, "in (0,1)"),
        _check("q = l^O(1)", l > 1 and q <= l ** ((kappa + 1) / (1 - delta)),
               q, l ** ((kappa + 1) / (1 - delta)), "<="),
        _check("sigma' >= 4 sqrt(omega(log lambda) + ln n + ln m)",
               sigma_prime >= 4 * math.sqrt(slack + ln_n + ln_m),
               sigma_prime, 4 * math.sqrt(slack + ln_n + ln_m), ">="),
        _check("k log2(n/k) >= (l+1) log2 q + omega(log lambda)",
               k * math.log2(n / k) >= (l + 1) * math.log2(q) + slack,
               k * math.log2(n / k), (l + 1) * math.log2(q) + slack, ">="),
        _check("lwe noise > sqrt(4 ln m + omega(log lambda))",
               lwe_noise > widen_bound, lwe_noise, widen_bound, ">"),
        _check("widened noise >= 3r sqrt(ln n + ln m + omega(log lambda))",
               math.hypot(lwe_noise, widen_extra) >= r * smoothing,
               math.hypot(lwe_noise, widen_extra), r * smoothing, ">="),
        _check("sigma_tilde in smoothing regime (eps < 1/3)", eps_fact < 1 / 3, eps_fact, 1 / 3, "<"),
        _check("rejection weight f in (1/2, 3/2)", max_ratio < 1.5 and min_ratio > 0.5,
               max_ratio, 1.5, "max < 3/2 and min > 1/2"),
        _check("acceptance >= 1/3", 1.0 / max_ratio >= 1 / 3, 1.0 / max_ratio, 1 / 3, ">="),
        _check("T = alpha", abs(T - alpha) <= 1e-12 * T, T, alpha, "=="),
        _check("Pr[|z| >= T/6] <= 1/3", z_tail <= 1 / 3, z_tail, 1 / 3, "<="),
    ]

    kb = k**beta
    return ReductionPlan(
        n=n, k=k, beta=float(beta), gamma=float(gamma), kappa=kappa, m=m,
        delta=delta, psi=psi, t=t, l=l, beta_prime=beta_prime, q=q,
        sigma_prime=sigma_prime, r=r, T=T, alpha=alpha, sigma_tilde=sigma_tilde,
        c_prime=float(c_prime), c_rejection=c_rej, c_sparsity=float(c_sparsity),
        c_sigma=float(c_sigma), log_lambda=log_lambda, slack=slack,
        lwe_noise=lwe_noise, widen_extra=widen_extra, smoothing=smoothing,
        effective_noise=effective, final_noise=final_noise, max_ratio=max_ratio,
        eps_ltf=c_eps / math.sqrt(k * ln_n), eps_relu=c_eps / (k * ln_n) ** 2,
        lower_bound_ltf=f"n^O(k^beta) = {n}^O({kb:.6g})",
        lower_bound_relu=f"n^O(k^beta) = {n}^O({kb:.6g})",
        validity=tuple(pre + chk),
    )
