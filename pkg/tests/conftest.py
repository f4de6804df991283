"""Shared fixtures and reporting hooks for the test suite."""

import numpy as np
import pytest

from wildgen.synthetic import SynthConfig, generate_corpus

# Collected by the acceptance tests; printed as a summary block at the
# end of the run so each criterion gets one visible PASS/FAIL line even
# when stdout capture is on.
ACCEPTANCE_RESULTS = []


def record_acceptance(name, passed, detail=""):
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        line = f"{name}: {'PASS' if passed else 'FAIL'}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def small_corpus():
    """A 12x40 corpus that keeps model-level tests fast."""
    return generate_corpus(
        SynthConfig(
            n_trajectories=12,
            horizon_days=40,
            start_center=(4.0, 45.0),
            start_radius=1.0,
            end_center=(14.0, 52.0),
            end_radius=1.0,
            n_stopovers=2,
            stopover_dwell_days=5,
            noise_sd=0.15,
            seed=7,
        )
    )
