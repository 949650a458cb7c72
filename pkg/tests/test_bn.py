import numpy as np
import pytest
from scipy import stats

from qacd.bn import (
    BUNDLED_NETWORKS,
    BifSemanticError,
    BifSyntaxError,
    Dataset,
    forward_sample,
    load_network,
    oracle_ci,
    parse_bif,
    read_bif,
    true_cpdag,
    write_bif,
)

from .conftest import bif_text

TWO_VAR = """
// comment
network toy { }
variable A { type discrete [ 2 ] { a0, a1 }; }
variable B {
  type discrete [ 3 ] { b0, b1, b2 };
  property weight = 7 ;
}
/* block
   comment */
probability ( A ) { table 0.2, 0.8; }
probability ( B | A ) {
  (a0) 0.1, 0.2, 0.7;
  (a1) 0.5, 0.25, 0.25;
}
"""


def test_parse_two_variable_network():
    net = parse_bif(TWO_VAR)
    assert net.name == "toy"
    assert net.names == ["A", "B"]
    assert net.cardinalities == [2, 3]
    assert net.dag.edges == {(0, 1)}
    np.testing.assert_allclose(net.cpts[0].table, [0.2, 0.8])
    np.testing.assert_allclose(net.cpts[1].row([0]), [0.1, 0.2, 0.7])
    np.testing.assert_allclose(net.cpts[1].row([1]), [0.5, 0.25, 0.25])


def test_table_keyword_child_slowest():
    text = """
    network t { }
    variable A { type discrete [ 2 ] { a0, a1 }; }
    variable B { type discrete [ 2 ] { b0, b1 }; }
    probability ( A ) { table 0.5, 0.5; }
    probability ( B | A ) { table 0.9, 0.3, 0.1, 0.7; }
    """
    net = parse_bif(text)
    np.testing.assert_allclose(net.cpts[1].row([0]), [0.9, 0.1])
    np.testing.assert_allclose(net.cpts[1].row([1]), [0.3, 0.7])


def test_default_row_fills_missing_configs():
    text = """
    network t { }
    variable A { type discrete [ 2 ] { a0, a1 }; }
    variable B { type discrete [ 2 ] { b0, b1 }; }
    probability ( A ) { table 0.5, 0.5; }
    probability ( B | A ) { (a1) 0.2, 0.8; default 0.6, 0.4; }
    """
    net = parse_bif(text)
    np.testing.assert_allclose(net.cpts[1].row([0]), [0.6, 0.4])


def test_parents_stored_in_index_order():
    text = bif_text({"A": ([], [[0.5, 0.5]]), "B": ([], [[0.3, 0.7]]),
                          "C": (["B", "A"], [[1, 0], [0.5, 0.5], [0.2, 0.8], [0, 1]])})
    net = parse_bif(text)
    assert net.cpts[2].parents == (0, 1)
    # file row (B=s1, A=s0) -> table[A=0, B=1]
    np.testing.assert_allclose(net.cpts[2].row([0, 1]), [0.2, 0.8])
    np.testing.assert_allclose(net.cpts[2].row([1, 0]), [0.5, 0.5])


def test_small_rounding_is_renormalized():
    net = parse_bif(TWO_VAR.replace("0.2, 0.8;", "0.2, 0.8000004;"))
    assert net.cpts[0].table.sum() == pytest.approx(1.0, abs=1e-12)


def test_unnormalized_row_rejected():
    with pytest.raises(BifSemanticError, match="sum"):
        parse_bif(TWO_VAR.replace("0.2, 0.8;", "0.2, 0.78;"))


def test_semantic_errors():
    with pytest.raises(BifSemanticError, match="unknown"):
        parse_bif(TWO_VAR.replace("B | A", "B | Z"))
    with pytest.raises(BifSemanticError, match="unknown state"):
        parse_bif(TWO_VAR.replace("(a1)", "(a7)"))
    with pytest.raises(BifSemanticError, match="expected 3"):
        parse_bif(TWO_VAR.replace("0.1, 0.2, 0.7", "0.3, 0.7"))
    with pytest.raises(BifSemanticError, match="cover"):
        parse_bif(TWO_VAR.replace("(a1) 0.5, 0.25, 0.25;", ""))
    cyclic = bif_text({"A": (["B"], [[0.5, 0.5], [0.5, 0.5]]), "B": (["A"], [[0.5, 0.5], [0.5, 0.5]])})
    with pytest.raises(BifSemanticError, match="invalid"):
        parse_bif(cyclic)


def test_syntax_error_reports_position():
    with pytest.raises(BifSyntaxError) as exc:
        parse_bif("network x { }\nvariable A { type discrete [ 2 ] { a0, a1 } }\n")
    assert exc.value.line == 2
    assert exc.value.column > 1


def test_round_trip():
    for name in ("asia", "child"):
        net = load_network(name)
        again = parse_bif(write_bif(net))
        assert again.names == net.names
        assert again.dag.edges == net.dag.edges
        for a, b in zip(net.cpts, again.cpts):
            assert a.parents == b.parents
            np.testing.assert_allclose(a.table, b.table, atol=1e-9)


def test_read_bif_from_path(tmp_path):
    p = tmp_path / "toy2.bif"
    p.write_text(TWO_VAR.replace("network toy", "network unknown"))
    assert read_bif(p).name == "toy2"
    assert load_network(p).n == 2
    with pytest.raises(FileNotFoundError):
        load_network(tmp_path / "missing.bif")


# counts from the bnlearn repository listing
NETWORK_SIZES = {
    "earthquake": (5, 4, 10), "survey": (6, 6, 21), "asia": (8, 8, 18), "child": (20, 25, 230),
    "insurance": (27, 52, 1008), "water": (32, 66, 10083), "hailfinder": (56, 66, 2656),
    "win95pts": (76, 112, 574),
}


@pytest.mark.parametrize("name", BUNDLED_NETWORKS)
def test_bundled_network_statistics(name):
    net = load_network(name)
    assert (net.n, len(net.dag.edges), net.n_parameters()) == NETWORK_SIZES[name]


def test_asia_cpdag_has_eight_edges():
    assert len(true_cpdag(load_network("asia")).skeleton().edges) == 8


# -- sampling ----------------------------------------------------------------


def test_sampling_is_deterministic(chain_net):
    a = forward_sample(chain_net, 500, 7)
    b = forward_sample(chain_net, 500, 7)
    c = forward_sample(chain_net, 500, 8)
    assert np.array_equal(a.columns, b.columns)
    assert not np.array_equal(a.columns, c.columns)


def test_deterministic_cpts_give_constant_rows():
    text = bif_text({"A": ([], [[0.0, 1.0]]), "B": (["A"], [[1.0, 0.0], [0.0, 1.0]]),
                          "C": (["B"], [[0.0, 1.0], [1.0, 0.0]])})
    d = forward_sample(parse_bif(text), 200, 3)
    assert (d.columns[0] == 1).all() and (d.columns[1] == 1).all() and (d.columns[2] == 0).all()


def test_root_marginal_concentrates():
    net = parse_bif(bif_text({"A": ([], [[0.3, 0.7]])}))
    d = forward_sample(net, 100_000, 11)
    assert abs(np.mean(d.columns[0] == 0) - 0.3) < 0.01


def test_pairwise_joint_goodness_of_fit(chain_net):
    # model joint of (A, C) by enumeration
    pa = chain_net.cpts[0].table
    pb = chain_net.cpts[1].table
    pc = chain_net.cpts[2].table
    joint = np.einsum("a,ab,bc->ac", pa, pb, pc)
    d = forward_sample(chain_net, 100_000, 5)
    obs = np.bincount(d.columns[0] * 2 + d.columns[2], minlength=4)
    p = stats.chisquare(obs, joint.ravel() * d.n_rows).pvalue
    assert p > 0.001


def test_dataset_csv_round_trip(tmp_path, chain_net):
    d = forward_sample(chain_net, 50, 1)
    path = tmp_path / "d.csv"
    d.to_csv(path)
    assert path.read_text().splitlines()[0] == "A,B,C"
    back = Dataset.from_csv(path, d.cardinalities)
    assert np.array_equal(back.columns, d.columns)
    assert back.names == d.names


def test_dataset_validates_indices():
    with pytest.raises(ValueError):
        Dataset(np.array([[0, 2]]), (2,))


# -- oracle --------------------------------------------------------------------


def test_oracle_ci(chain_net, collider_net):
    assert oracle_ci(chain_net, 0, 2, {1}) == 1.0
    assert oracle_ci(chain_net, 0, 1, {2}) == 0.0
    assert oracle_ci(collider_net, 0, 2, {1}) == 0.0
    assert oracle_ci(collider_net, 0, 2, ()) == oracle_ci(collider_net, 2, 0, ()) == 1.0


def test_true_cpdag_examples(chain_net, collider_net):
    c = true_cpdag(chain_net)
    assert c.is_undirected(0, 1) and c.is_undirected(1, 2)
    c = true_cpdag(collider_net)
    assert c.is_directed(0, 1) and c.is_directed(2, 1)
