import pytest

from gmpy2 import mpq

# one line per acceptance criterion, printed in the terminal summary so the
# verdicts survive output capture
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)

from x0iso.moduli import attach_external_model, build_model
from x0iso.series import QSeries
from x0iso.relations import BiPoly
from x0iso.tables import EXTERNAL_MODEL_11
from x0iso.catalog import Catalog


@pytest.fixture(scope="session")
def model11():
    return build_model(11)


@pytest.fixture(scope="session")
def model11_ext(model11):
    data = EXTERNAL_MODEL_11
    rel = BiPoly({k: mpq(v) for k, v in data["relation"].items()})
    vX, cX, tX = data["X"]
    vY, cY, tY = data["Y"]
    Xp = QSeries(vX, [mpq(c) for c in cX], tX)
    Yp = QSeries(vY, [mpq(c) for c in cY], tY)
    return attach_external_model(model11, Xp, Yp, rel)


@pytest.fixture(scope="session")
def model19():
    return build_model(19)


@pytest.fixture(scope="session")
def catalog():
    return Catalog()
