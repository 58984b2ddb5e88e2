import math
import re
from fractions import Fraction

import pytest

from cavityhall.lattice import ModelParams

# results of the acceptance criteria, echoed in the terminal summary
ACCEPTANCE_LINES: dict[str, str] = {}


def dynamics_params(flux, **kw) -> ModelParams:
    """lam/kappa = omega/kappa = delta/kappa = 0.5 on the 4x4 lattice."""
    base = dict(lam=0.5, omega=0.5, delta=0.5, kappa=1.0, flux=Fraction(flux), lattice_size=4)
    base.update(kw)
    return ModelParams(**base)


@pytest.fixture
def half_flux_params():
    return dynamics_params("1/2")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20261017)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


HALF_PI = math.pi / 2
