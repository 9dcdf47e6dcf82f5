import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trpca.curve import arclength_param, fourier_fit
from trpca.models import BsvmParams, BwcParams
from trpca.ridge import (connected_component, lower_concentration_index, model_oracle,
                         ridge_implicit)

settings.register_profile("trpca", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("trpca")

# (kappa1, kappa2, lambda) and (xi1, xi2, rho) of the ridge figure catalog
BSVM_CATALOG = [(0.3, 0.15, 0.25), (0.3, 0.6, 0.5), (0.3, 0.3, 1.0), (1.0, 0.5, 1.5)]
BWC_CATALOG = [(0.15, 0.075, 0.25), (0.2, 0.7, 0.2), (0.3, 0.3, 0.6), (0.025, 0.6, 0.7)]

CATALOG = ([BsvmParams(0.0, 0.0, *p) for p in BSVM_CATALOG]
           + [BwcParams(0.0, 0.0, *p) for p in BWC_CATALOG])
CATALOG_IDS = [f"{p.family}-{'-'.join(f'{v:g}' for v in (*p.concentrations, p.dependence))}"
               for p in CATALOG]


class _RidgeCache:
    """Implicit ridges, connected components and curves of the catalog, built once."""

    def __init__(self):
        self._ridges = {}
        self._curves = {}

    def ridge(self, params):
        if params not in self._ridges:
            j = lower_concentration_index(params)
            rs = ridge_implicit(model_oracle(params), index_coord=j, both=True)
            comp = connected_component(rs, params.mu, int(np.sign(params.dependence)))
            self._ridges[params] = (rs, comp)
        return self._ridges[params]

    def curve(self, params):
        if params not in self._curves:
            self._curves[params] = arclength_param(fourier_fit(self.ridge(params)[1], 15))
        return self._curves[params]


@pytest.fixture(scope="session")
def catalog():
    return _RidgeCache()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
