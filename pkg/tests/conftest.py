import pytest

from slitflow import contfrac
from slitflow.contfrac import CFExpansion, SlopeFamily, generate_slope_family
from slitflow.surface import SlitSurface


@pytest.fixture(scope="session")
def strict_family():
    return generate_slope_family(2, K=2, mode="strict")


@pytest.fixture(scope="session")
def scaled_family():
    return generate_slope_family(2, K=8, mode="scaled")


@pytest.fixture(scope="session")
def strict_surface(strict_family):
    return SlitSurface(strict_family)


@pytest.fixture(scope="session")
def scaled_surface(scaled_family):
    return SlitSurface(scaled_family)


@pytest.fixture(scope="session")
def golden_surface():
    """Single all-ones-expansion torus: theta = (sqrt 5 - 1)/2 to 40 levels."""
    fam = SlopeFamily(d=0, expansions=[CFExpansion([1] * 40)], u_seq=[],
                      mode="scaled")
    return SlitSurface(fam)


@pytest.fixture(scope="session")
def sqrt2_surface():
    """Single torus with theta = sqrt(2) - 1 = [0; 2, 2, 2, ...]."""
    fam = SlopeFamily(d=0, expansions=[CFExpansion([2] * 30)], u_seq=[],
                      mode="scaled")
    return SlitSurface(fam)
