import numpy as np
import pytest

from ccwlan.topology import NetworkTopology, canonical_figure1


@pytest.fixture
def fig1():
    inst = canonical_figure1()
    requests = {k: k for k in range(inst.topology.num_users)}
    return inst.topology, inst.profiles, requests


def random_topology(rng, H, K, p_trans=0.5, p_extra=0.3):
    """Random reachability relations with trans inside inter."""
    in_trans = rng.random((H, K)) < p_trans
    in_inter = in_trans | (rng.random((H, K)) < p_extra)
    return NetworkTopology(in_trans, in_inter)


def random_geometric_topology(rng, H, K, side=2.0):
    helpers = rng.uniform(0, side, size=(H, 2))
    users = rng.uniform(-0.5, side + 0.5, size=(K, 2))
    return NetworkTopology.from_coordinates(helpers, users, 1.0, 1.2)


def random_instance(rng, H, K, L):
    topo = random_topology(rng, H, K) if rng.random() < 0.5 else random_geometric_topology(rng, H, K)
    profiles = {k: int(rng.integers(1, L + 1)) for k in range(K)}
    requests = {k: int(c) for k, c in enumerate(rng.permutation(K))}
    return topo, profiles, requests


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                rows.append((props["criterion"], outcome.upper(), props.get("detail", ""), rep.duration))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, verdict, detail, dur in sorted(rows):
            terminalreporter.write_line(f"{verdict:6s} {name}  [{dur:.1f}s] {detail}")
