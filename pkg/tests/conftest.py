import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sydachain.kinematics import AgentModel, JointSpec

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

# lines printed by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def planar_arm(lengths, name="planar", limits=(-np.pi, np.pi)) -> AgentModel:
    """Serial arm in the xy-plane: every joint about z, links along x."""
    joints = tuple(JointSpec((0.0, 0.0, 1.0), limits, i - 1, f"j{i}") for i in range(len(lengths)))
    return AgentModel(
        name=name,
        joints=joints,
        link_lengths=tuple(lengths),
        keypoints={f"p{i}": i for i in range(len(lengths))},
        chains={"arm": tuple(range(len(lengths)))},
    )


@pytest.fixture
def planar_2r():
    return planar_arm((2.0, 3.0), "planar_2r")
