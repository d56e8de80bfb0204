import pytest

from ibrep import fixtures


@pytest.fixture(scope="session")
def small_corpus():
    return fixtures.corpus(n_per_family=8, seed=11)


@pytest.fixture(scope="session")
def canonical():
    return fixtures.canonical_fixtures()
