import math

import pytest

from lwe_hardness.errors import PlanningError
from lwe_hardness.planner import implied_fact_eps, plan_parameters

GRID = [
    (16, 4, 0.5, 1.0, 4), (64, 8, 0.3, 1.0, 2), (100, 5, 0.7, 1.0, 3),
    (256, 16, 0.5, 1.5, 1), (1000, 10, 0.2, 1.0, 5), (1024, 64, 0.9, 1.2, 2),
    (50, 4, 0.5, 1.0, 1), (400, 7, 0.6, 1.0, 3), (10000, 100, 0.4, 2.0, 2),
    (3000, 9, 0.1, 1.0, 4),
]


def reference(n, k, beta, gamma, kappa, c_prime=10.0):
    # independent transcription of the parameter choices
    delta = (1 - beta) / 3
    psi = math.log(k) / math.log(math.log(n))
    t = 1 + psi * (1 - delta)
    return {
        "delta": delta, "psi": psi, "t": t, "l": math.log(n) ** t,
        "beta_prime": (1 + gamma * (1 - 2 * delta)) / (1 + gamma * (1 - delta)),
        "q": k ** (kappa + 1),
        "T": 1 / (c_prime * math.sqrt(k * math.log(n))),
        "r": math.sqrt(k),
    }


@pytest.mark.parametrize("params", GRID)
def test_formulas_on_grid(params):
    plan = plan_parameters(*params)
    ref = reference(*params)
    for key, val in ref.items():
        assert getattr(plan, key) == pytest.approx(val, rel=1e-12), key
    assert plan.q == params[1] ** (params[4] + 1)  # [PAPER] q = k^(kappa+1)
    assert plan.T == pytest.approx(plan.alpha, rel=1e-12)
    assert plan.sigma_tilde == pytest.approx(1 / (plan.r * plan.alpha), rel=1e-12)
    assert plan.eps_ltf == pytest.approx(0.1 / math.sqrt(params[1] * math.log(params[0])))
    assert plan.eps_relu == pytest.approx(0.1 / (params[1] * math.log(params[0])) ** 2)
    assert plan.lower_bound_ltf.startswith(f"n^O(k^beta) = {params[0]}^O(")


def test_validity_records_every_checklist_item():
    plan = plan_parameters(16, 4, 0.5, 1.0, 4)
    names = [p.name for p in plan.validity if p.tier == "checklist"]
    assert "k log2(n/k) >= (l+1) log2 q + omega(log lambda)" in names
    assert "sigma' >= 4 sqrt(omega(log lambda) + ln n + ln m)" in names
    assert "acceptance >= 1/3" in names and "T = alpha" in names
    assert all(isinstance(p.passed, bool) for p in plan.validity)
    # the entropy inequality cannot hold at desk scale
    assert not plan.ok
    d = plan.to_dict()
    assert d["q"] == 1024 and len(d["validity"]) == len(plan.validity)


def test_desk_plan_values():
    # [DERIVED] frozen desk constants
    plan = plan_parameters(16, 4, 0.5, 1.0, 4)
    assert plan.T == pytest.approx(0.03002806021966125, rel=1e-12)
    assert plan.sigma_tilde == pytest.approx(16.651092223153952, rel=1e-12)
    assert plan.slack == 11
    assert plan.lwe_noise == 9.0
    assert plan.max_ratio == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("kwargs,predicate", [
    (dict(n=16, k=8, beta=0.5, gamma=1, kappa=4), "k <= cn"),
    (dict(n=16, k=2, beta=0.5, gamma=1, kappa=4), "k >= log^gamma n"),
    (dict(n=16, k=4, beta=0.0, gamma=1, kappa=4), "beta in (0,1)"),
    (dict(n=16, k=4, beta=1.0, gamma=1, kappa=4), "beta in (0,1)"),
    (dict(n=16, k=4, beta=0.5, gamma=0, kappa=4), "gamma > 0"),
    (dict(n=16, k=4, beta=0.5, gamma=1, kappa=0), "kappa is a positive integer"),
    (dict(n=16, k=4, beta=0.5, gamma=1, kappa=1.5), "kappa is a positive integer"),
    (dict(n=2, k=1, beta=0.5, gamma=1, kappa=1), "n >= 3"),
    (dict(n=16, k=0, beta=0.5, gamma=1, kappa=4), "k is a positive integer"),
])
def test_preconditions_named(kwargs, predicate):
    with pytest.raises(PlanningError) as info:
        plan_parameters(**kwargs)
    assert info.value.predicate == predicate
    assert f"{predicate} violated" in str(info.value)


def test_implied_eps():
    assert implied_fact_eps(0.1, 4) == math.inf
    sigma = 2.0
    eps = implied_fact_eps(sigma, 1)
    # the defining inequality holds with equality
    assert math.sqrt(math.log(2 * (1 + 1 / eps)) / math.pi) == pytest.approx(sigma, rel=1e-9)
    assert implied_fact_eps(40.0, 1) < 1e-300
