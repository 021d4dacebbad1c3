import numpy as np
import pytest

from maskperc.degree import DegreeDistribution
from maskperc.graph import (ContactNetwork, MaskModelParams, build_network, load_edgelist,
                            save_edgelist, type_counts)


def test_params_validation():
    with pytest.raises(ValueError, match=r"m must lie in \[0,1\]"):
        MaskModelParams(1.2, 0.1, 0.1, 0.1, 0.1)
    with pytest.raises(ValueError, match="T12"):
        MaskModelParams(0.5, 0.1, -0.1, 0.1, 0.1)


def test_factored_form():
    p = MaskModelParams.factored(0.45, 0.5, 0.3, 0.7)
    assert (p.T11, p.T12, p.T21, p.T22) == pytest.approx((0.105, 0.35, 0.15, 0.5))
    q = MaskModelParams.factored(0.45, 0.5, 0.3, 0.7, T21=0.4)
    assert q.T21 == 0.4


def test_build_network_degrees_and_labels():
    d = DegreeDistribution.poisson(6.0)
    net = build_network(d, 50_000, 0.3, rng_seed=11)
    deg = net.degrees()
    assert deg.sum() == 2 * net.n_edges
    assert deg.mean() == pytest.approx(6.0, abs=0.05)
    n1, n2 = type_counts(net)
    assert n1 + n2 == net.n
    assert n1 / net.n == pytest.approx(0.3, abs=0.01)
    again = build_network(d, 50_000, 0.3, rng_seed=11)
    assert net.same_as(again)


def test_simple_graph_removes_loops_and_multiedges():
    net = ContactNetwork.from_edges(3, np.array([[0, 0], [0, 1], [1, 0], [1, 2]]), np.array([1, 2, 1]))
    s = net.simplified()
    assert s.n_edges == 2
    assert set(map(tuple, s.edges.tolist())) == {(0, 1), (1, 2)}
    built = build_network(DegreeDistribution.poisson(3.0), 2000, 0.5, rng_seed=1, simple=True)
    e = built.edges
    assert np.all(e[:, 0] != e[:, 1])
    assert len(np.unique(np.sort(e, axis=1), axis=0)) == len(e)


def test_csr_self_loop_listed_twice():
    net = ContactNetwork.from_edges(2, np.array([[0, 0], [0, 1]]), np.array([1, 2]))
    assert list(net.degrees()) == [3, 1]


def test_edgelist_roundtrip(tmp_path):
    net = build_network(DegreeDistribution.poisson(2.0), 100, 0.5, rng_seed=5)
    f = tmp_path / "g.txt"
    save_edgelist(net, f)
    assert load_edgelist(f).same_as(net)
    f.write_text("garbage\n")
    with pytest.raises(ValueError):
        load_edgelist(f)


def test_invalid_network_inputs():
    with pytest.raises(ValueError):
        ContactNetwork.from_edges(2, np.array([[0, 2]]), np.array([1, 1]))
    with pytest.raises(ValueError):
        ContactNetwork.from_edges(2, np.array([[0, 1]]), np.array([1, 3]))
    with pytest.raises(ValueError):
        build_network(DegreeDistribution.poisson(2.0), 1, 0.5, rng_seed=0)
