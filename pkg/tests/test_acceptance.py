"""Acceptance suite: one test and one printed pass/fail line per criterion.

Every tolerance is passed explicitly so that the thresholds checked here do
not depend on the defaults in :mod:`surfpam.checks`.  The collected lines are
repeated in the terminal summary (see ``conftest.py``).
"""
import pytest

from surfpam.checks import RUNNERS

PINNED = {
    1: dict(orders=(1, 2, 3), gamma_tol=1e-10, transport_tol=1e-12),
    2: dict(orders=(1, 2, 3), tol=0.1, tol_scale=1.0),
    3: dict(orders=(1, 2), tol_hom=0.15, tol_transport=0.2, tol_scale=1.0),
    4: dict(mass_tol=1e-8, semigroup_tol=1e-6, N=1, tol=0.2, tol_scale=1.0),
    5: dict(K=256, t=0.1, nu=0.1, tol=0.1, tol_scale=1.0),
    6: dict(K=32, n_seeds=100, alpha=-1.2, tol=0.15, tol_scale=1.0),
    7: dict(K=256, n_seeds=200, tol=0.3, tol_scale=1.0, n_se=3.0, identity_tol=1e-10),
    8: dict(K=256, alpha=-1.2, tol=0.2, tol_scale=1.0),
    9: dict(K=128, alpha=-1.2, gamma=1.5, tol=0.2, tol_scale=1.0),
    10: dict(K=8, Ts=(0.1, 0.05, 0.025), identity_tol=1e-6),
    11: dict(K=8, T=0.05, zero_tol=1e-8, const_tol=1e-6, cross_tol=1e-2),
    12: dict(Ks=(8, 16, 32), growth=1.2),
}

LINES = []


@pytest.mark.slow
@pytest.mark.parametrize("criterion", sorted(PINNED), ids=[f"C{n:02d}" for n in sorted(PINNED)])
def test_criterion(criterion, capsys):
    res = RUNNERS[criterion](**PINNED[criterion])
    line = f"{res.line()} [{res.seconds:.1f}s]"
    LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert res.passed, line
