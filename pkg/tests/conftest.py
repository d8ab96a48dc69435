import pytest

from bipkit import load_bundled_model


@pytest.fixture(scope="session")
def star():
    return load_bundled_model("star.bip")


@pytest.fixture(scope="session")
def routes():
    return load_bundled_model("switchable_routes.bip")


@pytest.fixture(scope="session")
def mutex():
    return load_bundled_model("mutex.bip")


@pytest.fixture(scope="session")
def broadcast_pair():
    return load_bundled_model("broadcast_pair.bip")


@pytest.fixture(scope="session")
def ambiguous_pairing():
    return load_bundled_model("ambiguous_pairing.bip")


@pytest.fixture(scope="session")
def complete_pairing():
    return load_bundled_model("complete_pairing.bip")
