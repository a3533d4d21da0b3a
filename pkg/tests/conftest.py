import math

import pytest

from nuqwalk.core import ModelParams, exceptional_gamma

FIG1_ANGLES = (math.pi / 4, -math.pi / 7, 0.0)
FIG3_ANGLES = (-math.pi / 4, -math.pi / 7, 0.0)
GAMMA_EP = exceptional_gamma(math.pi / 4, -math.pi / 7)
GAMMA_GRID = (0.0, math.log(1.3), GAMMA_EP, math.log(1.5))

_acceptance_lines = []


def fig1(gamma=0.0, steps=25):
    return ModelParams(*FIG1_ANGLES, gamma=gamma, steps=steps)


def fig3(gamma=0.0, steps=100):
    return ModelParams(*FIG3_ANGLES, gamma=gamma, steps=steps)


@pytest.fixture
def record_criterion():
    """Log one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def _record(label, passed, detail=""):
        _acceptance_lines.append(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
