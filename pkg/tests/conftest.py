import numpy as np
import pytest

from seismicwarn.schema import ASSESSMENTS, GENERAL_FEATURES, HOURS, SERIES_INDEX, SERIES_NAMES, Dataset
from seismicwarn.synth import SynthConfig, synth_generate


def make_dataset(n=10, locations=None, chrono=None, labels=None, hourly=None, seed=0, mode="contiguous"):
    """Small valid dataset with random nonnegative content."""
    rng = np.random.default_rng(seed)
    locations = np.full(n, 1) if locations is None else np.asarray(locations)
    chrono = np.arange(n) if chrono is None else np.asarray(chrono)
    if hourly is None:
        hourly = rng.integers(0, 5, size=(n, len(SERIES_NAMES), HOURS)).astype(float)
    general = rng.uniform(0, 100, size=(n, len(GENERAL_FEATURES)))
    return Dataset(
        ids=np.arange(n) + 1000,
        locations=locations,
        chrono=chrono,
        general=general,
        assessments=rng.integers(1, 5, size=(n, len(ASSESSMENTS))),
        main_working_id=locations.copy(),
        hourly=hourly,
        labels=labels,
        mode=mode,
    )


def separable_labels(dataset: Dataset, series="total_number_of_bumps", hours=8, quantile=0.85):
    """Labels that are a threshold of one window statistic, so FS4 separates them.

    The series is integer valued, so any cut between consecutive integers
    learned on one subset separates every other subset too.
    """
    signal = dataset.hourly[:, SERIES_INDEX[series], HOURS - hours :].max(axis=1)
    return (signal > np.floor(np.quantile(signal, quantile))).astype(int)


@pytest.fixture(scope="session")
def small_synth():
    return synth_generate(SynthConfig(n_locations=4, hours=400, seed=11))


@pytest.fixture(scope="session")
def medium_synth():
    return synth_generate(SynthConfig(n_locations=8, hours=800, seed=3))


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """``record(number, title, passed, detail)`` prints and collects one criterion line."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, title, passed, detail):
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} [{detail}]"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
