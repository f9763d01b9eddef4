"""Shared fixtures and the acceptance summary hook.

The desk-scale dataset (500 train + 100 validation structures at 64^2)
takes several minutes to build, so it is session-scoped and built once;
only the acceptance tests request it.  The small dataset is for unit
tests of the persistence and CLI layers.
"""

import numpy as np
import pytest

from vrnet.dataset import build_dataset

_ACCEPTANCE = []


def record_acceptance(n, passed, detail=""):
    _ACCEPTANCE.append((n, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(_ACCEPTANCE):
        tail = f" - {detail}" if detail else ""
        terminalreporter.write_line(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'}{tail}")


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """12 + 4 structures at 32^2; enough to exercise IO and the CLI."""
    out = tmp_path_factory.mktemp("tiny")
    man = build_dataset(str(out), dim=2, resolution=32, n_train=12, n_val=4, seed=3)
    return str(out), man


@pytest.fixture(scope="session")
def desk_dataset(tmp_path_factory):
    """The acceptance-scale dataset: 500 x 12 train, 100 x 20 validation."""
    out = tmp_path_factory.mktemp("desk")
    man = build_dataset(str(out), dim=2, resolution=64, n_train=500, n_val=100, seed=0)
    return str(out), man


def random_bounds(rng, m, spread=2.0):
    """A consistent random (Voigt, Reuss) pair with full-rank gap."""
    a = rng.normal(size=(m, m))
    y_reuss = a @ a.T + m * np.eye(m)
    b = rng.normal(size=(m, m))
    gap = b @ b.T + 0.5 * spread * np.eye(m)
    return y_reuss + gap, y_reuss


def random_admissible(rng, b):
    """Y = Y_V - L (Q Lam Q^T) L^T with eigenvalues away from 0 and 1."""
    from vrnet.specnorm import param_to_q

    m = b.rank
    lam = rng.uniform(0.05, 0.95, size=m)
    xi = rng.uniform(0.05, 0.95, size=m * (m - 1) // 2)
    q = param_to_q(xi, m)
    y_tilde = (q * lam) @ q.T
    y = b.y_voigt - b.l_factor @ y_tilde @ b.l_factor.T
    return 0.5 * (y + y.T)
