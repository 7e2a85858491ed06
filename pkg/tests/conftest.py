import json
import pathlib

import numpy as np
import pytest

from waring.core import HomogeneousPoly, expand_power_sum, parse_poly, poly_from_json

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

# the known support of the quintic fixture: weight -> affine point
QUINTIC_SUPPORT = [
    (15.0, (2.0, 3.0)),
    (15.0, (-2.0, 3.0)),
    (5.0, (-12.0, -3.0)),
    (3.0, (12.0, -13.0)),
]


def load_text_poly(name: str) -> HomogeneousPoly:
    return parse_poly((FIXTURES / name).read_text())


def load_json_poly(name: str) -> HomogeneousPoly:
    return poly_from_json(json.loads((FIXTURES / name).read_text()))


def planted_poly(nvars: int, degree: int, r: int, rng, sep: float = 0.3):
    """A rank-r power sum in affine position, general enough to recover."""
    pts = []
    while len(pts) < r:
        z = rng.standard_normal(nvars) + 1j * rng.standard_normal(nvars)
        z[0] = 1.0
        if all(np.linalg.norm(z - q) > sep for q in pts):
            pts.append(z)
    wts = rng.standard_normal(r) + 1j * rng.standard_normal(r)
    terms = list(zip(wts, pts))
    return expand_power_sum(terms, nvars, degree), terms


@pytest.fixture(scope="session")
def quintic():
    return load_text_poly("ternary_quintic_rank4.txt")


@pytest.fixture(scope="session")
def quartic():
    return load_text_poly("ternary_quartic_rank6.txt")


@pytest.fixture(scope="session")
def maximal_cubic():
    return load_text_poly("cubic_maximal.txt")
