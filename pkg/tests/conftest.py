import sys
import time

import pytest

from kerrgate.oracles import PhysicalDefaults, commutator_norm_ratio, dyson_taylor_second_order

EXTENTS = (4.0, 6.0, 8.0)


@pytest.fixture(scope="session")
def commutator_ladder():
    """Ratios for both kinds over the extent ladder at default parameters,
    plus the filter at eta = 0.1; also the wall time of the whole set."""
    d = PhysicalDefaults()
    dt = 1.0 / (4 * d.sigma)
    t0 = time.perf_counter()
    out = {}
    for e in EXTENTS:
        b = d.basis(e)
        out[e] = {k: commutator_norm_ratio(d.kernel(k), 0.0, dt, b) for k in ("dispersion", "gaussian_filter")}
    out["eta_0.1"] = commutator_norm_ratio(d.kernel("gaussian_filter", M=10 * d.sigma), 0.0, dt, d.basis())
    out["seconds"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def dyson_pair():
    """Two independent 10^5-sample runs at sigma = 1e9, M = 1e10."""
    t0 = time.perf_counter()
    runs = [dyson_taylor_second_order(1e9, 1e10, samples=100_000, seed=s) for s in (1, 2)]
    return runs, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    RESULTS = getattr(mod, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[k])
