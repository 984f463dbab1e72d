import numpy as np
import pytest

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, title, passed, detail=""):
        ACCEPTANCE[number] = (title, None if passed is None else bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({detail})")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_experiment():
    from helpers import synthetic_experiment as build

    return build(seed=0)


@pytest.fixture(scope="session")
def synthetic_dataset(synthetic_experiment):
    from helpers import synthetic_physics
    from phyzzygan.data import SplitSpec, concat_split

    dataset = synthetic_experiment[0]
    train_idx, test_idx = concat_split(len(dataset), SplitSpec(0.8, seed=0))
    return dataset.subset(train_idx), dataset.subset(test_idx), synthetic_physics()
