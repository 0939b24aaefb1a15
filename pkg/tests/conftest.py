"""Shared fixtures, random case builders and the acceptance summary hook."""

import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gridstrength.casefile import case_from_dict, load_bundled_case

settings.register_profile(
    "suite",
    derandomize=True,
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

CONVERTER_BLOCK = {
    "p_dn_mw": 990.0,
    "gamma_deg": 15.0,
    "n_bridges": 2,
    "k_ratio": 0.4196,
    "x_commutation_pu": 0.0528,
    "r_dc_pu": 0.01,
    "b_c_pu": 0.5093,
    "u_ac_kv": 230.0,
}


@pytest.fixture(scope="session")
def sidc():
    return load_bundled_case("cigre_sidc")


@pytest.fixture(scope="session")
def dual():
    return load_bundled_case("dual")


@pytest.fixture(scope="session")
def triple():
    return load_bundled_case("triple")


@pytest.fixture(scope="session")
def quad():
    return load_bundled_case("quad")


def random_network_doc(rng, n, link_prob=0.7):
    """Random connected inductive network document with n converter buses.

    A random spanning tree keeps the bus graph connected; extra ties and
    per-bus Thevenin links (at least one) are sprinkled on top.  Ratings
    are random and emfs are 1.0 (tests that need a tuned rated point tune
    separately).
    """
    buses = [f"b{i}" for i in range(n)]
    branches = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        branches.append({
            "from": buses[i], "to": buses[j],
            "reactance_pu": float(rng.uniform(0.2, 2.0)),
        })
    for _ in range(int(rng.integers(0, n))):
        i, j = rng.choice(n, size=2, replace=False)
        branches.append({
            "from": buses[int(i)], "to": buses[int(j)],
            "reactance_pu": float(rng.uniform(0.2, 2.0)),
        })
    linked = [b for b in buses if rng.random() < link_prob]
    if not linked:
        linked = [buses[int(rng.integers(0, n))]]
    links = [{
        "bus": b, "reactance_pu": float(rng.uniform(0.3, 1.5)), "emf_pu": 1.0,
    } for b in linked]
    converters = [
        {**CONVERTER_BLOCK, "bus": b, "p_dn_mw": float(rng.uniform(300.0, 1500.0))}
        for b in buses
    ]
    return {
        "name": f"random-{n}",
        "system_base_mva": 990.0,
        "frequency_hz": 60,
        "buses": [{"id": b, "kind": "converter"} for b in buses],
        "branches": branches,
        "thevenin_links": links,
        "converters": converters,
    }


def random_case(rng, n):
    return case_from_dict(random_network_doc(rng, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


# --------------------------------------------------------------- reporting

MEASURED = {}

CRITERIA = {
    1: "single-infeed thresholds: closed forms and scale searches in band",
    2: "nose powers at index 2 within 1% of rated, all four cases",
    3: "overlap angles at index 3 within 1.5 deg of 30, all four cases",
    4: "dual-infeed rating sweep: spreads and means in band",
    5: "random connected networks: positive spectrum, positive Perron vector, simple minimum",
    6: "determinant-vs-product factorization residual at 1e-8",
    7: "single-infeed collapse exact; eigensolve matches charpoly bisection oracle",
    8: "Jacobian and converter derivatives match finite differences; approximation band",
    9: "impedance scaling homogeneity of the index",
}

_acceptance_outcomes = {}
ACCEPTANCE_NOTES = {}


@pytest.fixture
def measured():
    """Dict collected across the run and printed in the terminal summary."""
    return MEASURED


@pytest.fixture
def note_criterion():
    """Stash a one-line detail to show next to a criterion's PASS/FAIL line."""

    def _note(num, text):
        ACCEPTANCE_NOTES[num] = text

    return _note


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if m:
        _acceptance_outcomes[int(m.group(1))] = report.outcome


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    if _acceptance_outcomes:
        tr.section("acceptance criteria")
        for num in sorted(_acceptance_outcomes):
            flag = "PASS" if _acceptance_outcomes[num] == "passed" else "FAIL"
            line = f"criterion {num}: {flag}  {CRITERIA.get(num, '')}"
            note = ACCEPTANCE_NOTES.get(num)
            if note:
                line += f"  [{note}]"
            tr.write_line(line)
    if MEASURED:
        tr.section("measured values (logged)")
        for key in sorted(MEASURED):
            val = MEASURED[key]
            text = f"{val:.6g}" if isinstance(val, float) else str(val)
            tr.write_line(f"{key} = {text}")
