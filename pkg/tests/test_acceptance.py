"""One test per acceptance criterion, each run through a named built-in config.

Tolerances are asserted against the shipped defaults before running, so a
criterion cannot pass by editing the config. Each test prints one summary
line (collected again in the terminal summary).
"""

import pytest

from grauert_lab import lab_harness as lh

from .conftest import ACCEPTANCE_LINES

PINNED = {
    "geometry-suite": dict(geo_dims=(2, 3), geo_taus=(0.25, 0.5, 1.0), geo_points=1000, geo_tol=1e-10),
    "chart-suite": dict(chart_tol=1e-10, chart_order_min=2.9, chart_flow_tol=1e-8),
    "stationary-phase": dict(oracle_gauss_tol=1e-8),
    "toeplitz-diagonality": dict(toeplitz_K=4, tau=0.5, toeplitz_offdiag_tol=1e-10, toeplitz_diag_tol=1e-8),
    "szego-diagonal": dict(d=2, tau=0.5, window="bump", eps=0.25, lambdas=(250.0, 500.0, 1000.0, 2000.0, 4000.0),
                           diag_check_lambdas=(1000.0, 4000.0), diag_check_tols=(0.10, 0.05),
                           diag_remainder_range=(-1.3, -0.7)),
    "poisson-diagonal": dict(d=2, tau=0.5, poisson_growth_tol=0.05, poisson_check_lambda=4000.0,
                             poisson_check_tol=0.10),
    "near-diagonal": dict(d=2, tau=0.5, near_lambda=4000.0, near_ratio_range=(0.9, 1.1), phase_freq_tol=0.02,
                          near_remainder_range=(-0.75, -0.25)),
    "weyl-laws": dict(d=2, tau=0.5, window="fejer", weyl_szego_tol=0.02, weyl_residual_slack=0.3,
                      weyl_poisson_range=(500.0, 4000.0), weyl_poisson_tol=0.05),
    "rapid-decay": dict(decay_delta=0.1, decay_C=5.0, decay_max_exponent=-3.0),
}

CRITERIA = [
    (1, "geometry suite", "geometry-suite", 5.0),
    (2, "Heisenberg chart suite", "chart-suite", 10.0),
    (3, "stationary-phase oracle", "stationary-phase", 30.0),
    (4, "Toeplitz diagonality oracle", "toeplitz-diagonality", 60.0),
    (5, "Szego on-diagonal", "szego-diagonal", 120.0),
    (6, "Poisson on-diagonal", "poisson-diagonal", 120.0),
    (7, "near-diagonal Gaussian profile", "near-diagonal", 300.0),
    (8, "Weyl laws", "weyl-laws", 180.0),
    (9, "rapid-decay proxy", "rapid-decay", 120.0),
]


@pytest.mark.parametrize("num,title,name,budget", CRITERIA, ids=[c[2] for c in CRITERIA])
def test_criterion(num, title, name, budget):
    kind, cfg = lh.builtin_config(name)
    for key, val in PINNED[name].items():
        assert getattr(cfg, key) == val, f"{key} drifted from its pinned value"
    rep = lh.run_experiment(cfg, kind)
    failed = [c for c in rep.checks if not c.passed]
    in_time = rep.wall_clock < budget
    ok = not failed and in_time
    detail = "; ".join(c.line() for c in failed)
    line = (f"criterion {num} {title}: {'PASS' if ok else 'FAIL'}  "
            f"[{len(rep.checks) - len(failed)}/{len(rep.checks)} checks, {rep.wall_clock:.1f} s < {budget:g} s]")
    if detail:
        line += f"  failing: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert in_time, f"runtime {rep.wall_clock:.1f} s exceeds {budget} s"
    assert not failed, detail
