import pytest

from app import create_app
from app.config import Config
from measurement_data.measurement_data import parse_long_csv
from measurement_data.utils import parse_covariate_schema

TOY_UNPAIRED_CSV = """subject,method,replicate,value
s1,A,1,1
s1,A,2,2
s1,A,3,3
s1,B,1,1
s1,B,2,1
s1,B,3,1
s2,A,1,4
s2,A,2,4
s2,B,1,2
s2,B,2,2
"""

TOY_PAIRED_CSV = """subject,method,replicate,value
s1,A,1,2
s1,A,2,4
s1,B,1,1
s1,B,2,1
s2,A,1,6
s2,A,2,8
s2,B,1,1
s2,B,2,1
"""

STEP_SCHEMA = "x:numeric,sex:binary,stage:ordinal=I|II|III"


def make_step_csv(n=40, shift=10.0):
    """Paired data whose bias jumps by ``shift`` above x = n/2.

    Every subject has differences bias + (-1, 0, 1), so within a side all
    subjects look alike.
    """
    lines = ["subject,method,replicate,value,x,sex,stage,side"]
    width = len(str(n))
    for i in range(1, n + 1):
        bias = 0.0 if i <= n // 2 else shift
        sex = "F" if i % 2 else "M"
        stage = ("I" if i % 2 else "II") if i <= n // 2 else "III"
        side = "low" if i <= n // 2 else "high"
        for rep, offset in enumerate((-1.0, 0.0, 1.0), start=1):
            truth = 50.0 + i
            sid = f"s{i:0{width}d}"
            lines.append(f"{sid},A,{rep},{truth + bias + offset},{i},{sex},{stage},{side}")
            lines.append(f"{sid},B,{rep},{truth},{i},{sex},{stage},{side}")
    return "\n".join(lines) + "\n"


class TestingConfig(Config):
    __test__ = False
    TESTING = True


@pytest.fixture
def toy_unpaired():
    return parse_long_csv(TOY_UNPAIRED_CSV, "unpaired")


@pytest.fixture
def toy_paired():
    return parse_long_csv(TOY_PAIRED_CSV, "paired")


@pytest.fixture
def step_csv():
    return make_step_csv()


@pytest.fixture
def step_dataset(step_csv):
    return parse_long_csv(step_csv, "paired", parse_covariate_schema(STEP_SCHEMA))


@pytest.fixture(scope="session")
def app():
    return create_app(TestingConfig)


@pytest.fixture
def client(app):
    return app.test_client()
