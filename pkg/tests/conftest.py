import pytest

from mgsched.scenario import reference_scenario


@pytest.fixture(scope="session")
def ref():
    return reference_scenario()


@pytest.fixture(scope="session")
def ref_solution(ref):
    from mgsched.solve import solve_dst

    return solve_dst(ref)
