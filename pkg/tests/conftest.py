import pytest

from coupler_lab.hamiltonian import CircuitParams
from coupler_lab.hilbert import FockSpace

# parameter sets reused across modules (GHz)
DETUNED = CircuitParams(f_q1=5.2, f_q2=5.0, f_c=6.0, a_q1=-0.2, a_q2=-0.2, a_c=-0.2, g1=0.05, g2=0.05)
COUPLER_RES = CircuitParams(f_q1=5.0, f_q2=5.0, f_c=5.4, a_q1=-0.2, a_q2=-0.2, a_c=-0.8, g1=0.02, g2=0.02)
DISPERSIVE = CircuitParams(f_q1=5.0, f_q2=5.0, f_c=6.0, a_q1=-0.2, a_q2=-0.2, a_c=-0.4, g1=0.05, g2=0.05)
MIXED_SIGN = CircuitParams(f_q1=5.0, f_q2=5.0, f_c=6.0, a_q1=-0.2, a_q2=0.3, a_c=-0.25, g1=0.08, g2=0.08)
ASYM = CircuitParams(f_q1=5.0, f_q2=5.0, f_c=5.4, a_q1=-0.2, a_q2=-0.3, a_c=-0.3, g1=0.04, g2=0.04)
GATE_SET = CircuitParams(f_q1=5.0, f_q2=5.0, f_c=6.0, a_q1=-0.2, a_q2=-0.2, a_c=-0.25, g1=0.08, g2=0.08)

# region rows: (f_q1, f_q2, f_c, a_c, g), qubit anharmonicity used for the gate-error curves
REGIONS = {
    "I": ((5.0, 5.0, 5.4, -0.3, 0.04), -0.3),
    "II": ((5.0, 5.0, 5.6, -0.8, 0.06), -0.25),
    "III": ((5.8, 5.8, 5.4, 1.2, 0.04), -0.15),
    "IV": ((5.8, 5.8, 5.0, 0.6, 0.06), 0.4),
}


def region(name: str) -> CircuitParams:
    (f1, f2, fc, ac, g), aq = REGIONS[name]
    return CircuitParams(f_q1=f1, f_q2=f2, f_c=fc, a_q1=aq, a_q2=aq, a_c=ac, g1=g, g2=g)


@pytest.fixture(scope="session")
def space5():
    return FockSpace.uniform(5)


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
