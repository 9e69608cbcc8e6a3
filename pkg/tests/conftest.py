import pytest


@pytest.fixture(scope="session")
def machine():
    from fatoubasin.fatou import default_machine
    return default_machine()


@pytest.fixture(scope="session")
def curve():
    from fatoubasin.curve import default_curve
    return default_curve()


@pytest.fixture(scope="session")
def germ4():
    from fatoubasin import jets, mapchain
    return mapchain.germ_of_chain(mapchain.default_chain(), 4, jets.RATIONAL)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
