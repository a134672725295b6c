import numpy as np
import pytest

from itersde import (Brownian, Cauchy, Composite, DriftOnly, Gamma,
                     LevyDriverSpec, SymmetricStable, field_from_text)


@pytest.fixture
def brownian():
    return LevyDriverSpec(Brownian(1.0))


@pytest.fixture
def cauchy():
    return LevyDriverSpec(Cauchy(1.0))


@pytest.fixture
def showcase_system():
    """The sin/2y inner matrix with the cos/x outer row, driven by (Z, t)'."""
    psi = field_from_text("[[sin(y1), 2*y1], [0, 1]]", in_dim=2)
    phi = field_from_text("[[cos(x1), x1]]", in_dim=1)
    drv = LevyDriverSpec(Composite((LevyDriverSpec(Brownian(1.0), time_scale=1000.0),
                                    LevyDriverSpec(DriftOnly(1.0)))))
    return phi, psi, drv


@pytest.fixture
def bounded_pair():
    """A 1x1 bounded bijective coefficient pair."""
    phi = field_from_text("[[2 + cos(x1)]]", in_dim=1)
    psi = field_from_text("[[2 + sin(y1)]]", in_dim=1)
    return phi, psi


def scalar_families():
    return [LevyDriverSpec(Brownian(1.3)),
            LevyDriverSpec(Cauchy(0.7)),
            LevyDriverSpec(SymmetricStable(1.5, 0.9)),
            LevyDriverSpec(SymmetricStable(0.5, 1.1)),
            LevyDriverSpec(Gamma(2.0, 3.0)),
            LevyDriverSpec(DriftOnly(0.8))]


def rng(seed=0):
    return np.random.default_rng(seed)
