import pytest

from memlstm import dataset as ds
from memlstm import lstm

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def prepared():
    return ds.prepare()


@pytest.fixture(scope="session")
def trained(prepared):
    """Weights from the default trainer settings (lr 0.05, 500 epochs, seed 42)."""
    return lstm.train(prepared.train, lstm.Hyperparams())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
