import numpy as np
import pytest

from pourskill.core import ContainerSpec, TrialRecord, volume_to_weight
from pourskill.harness.config import SuiteConfig
from pourskill.harness.suite import generate_demos, train_from_demos


@pytest.fixture
def cup():
    return ContainerSpec("cup", 100.0, 60.0)


def make_trial(container=None, n=120, f_total=0.6, f_2pour=0.25, tag="synthetic-demo"):
    """A plausible hand-made trial: tilt up, pour, return."""
    container = container or ContainerSpec("cup", 100.0, 60.0)
    t = np.arange(n)
    theta = 60.0 * np.sin(np.pi * t / (n - 1)) ** 2
    f = f_2pour * (1 - np.cos(np.pi * t / (n - 1))) / 2
    return TrialRecord(container, f_total, f_2pour, theta, f, source_tag=tag)


@pytest.fixture
def trial(cup):
    return make_trial(cup)


@pytest.fixture(scope="session")
def small_demos():
    return generate_demos(120, root_seed=11)


@pytest.fixture(scope="session")
def small_model(small_demos):
    """A quickly trained network: it finishes about half its pours, not accurately."""
    cfg = SuiteConfig(seed=11, n_demos=120, epochs=200, n_units=12)
    return train_from_demos(small_demos, cfg)[0].checkpoint


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, print it, and assert it."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)


__all__ = ["make_trial", "volume_to_weight"]
