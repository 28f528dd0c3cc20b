import pytest

from withprofit.io import load_bound_inputs, load_curve, load_portfolio, load_spot_series

@pytest.fixture(scope="session")
def curve():
    return load_curve("eur_discount_2017.csv")

@pytest.fixture(scope="session")
def spot_series():
    return load_spot_series("eur_spot15y_2014_2017.csv")

@pytest.fixture(scope="session")
def allianz():
    return load_bound_inputs("allianz_2017.json")

@pytest.fixture(scope="session")
def toy_stochastic():
    return load_portfolio("toy_stochastic.json")

@pytest.fixture(scope="session")
def toy_matched():
    return load_portfolio("toy_matched.json")


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
