import numpy as np
import pytest

import toruslab as tl
from toruslab.skew import SkewProduct, build_example_fiber_family, product_map, rigid_translation

GOLDEN = tl.GOLDEN_ROTATION.value   # (sqrt(5) - 1) / 2
SILVER = tl.SILVER_ROTATION.value   # sqrt(2) - 1


@pytest.fixture(scope="session")
def golden_denjoy():
    spec = tl.DenjoySpec.with_total_gap_length(tl.GOLDEN_ROTATION, 0.5, 4.0, 2000)
    return tl.build_denjoy(spec)


@pytest.fixture(scope="session")
def silver_denjoy():
    spec = tl.DenjoySpec.with_total_gap_length(tl.SILVER_ROTATION, 0.5, 4.0, 2000)
    return tl.build_denjoy(spec)


@pytest.fixture(scope="session")
def fiber_family(golden_denjoy, silver_denjoy):
    return build_example_fiber_family(golden_denjoy, silver_denjoy.lift, 0.1, 0.5)


@pytest.fixture(scope="session")
def skew_example(golden_denjoy, fiber_family):
    return SkewProduct(golden_denjoy, fiber_family)


@pytest.fixture(scope="session")
def denjoy_product(golden_denjoy, silver_denjoy):
    return product_map(golden_denjoy, silver_denjoy.lift)


@pytest.fixture(scope="session")
def rigid_map():
    return rigid_translation(GOLDEN, SILVER)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
