import numpy as np
import pytest

from qso.construct import GeneratedOperator, volterra_canonical
from qso.dynamics import vertex
from qso.errors import InconsistentMarginals
from qso.model import Model, two_vertex_example
from qso.reduction import (
    commutation_residual,
    is_product_form,
    marginalize,
    product_state,
    reconstruct,
    reduce,
    reduced_step,
    run_reduced,
    step_replicator_form,
    step_skew_form,
)

EXAMPLE_STEP = [0.33, 0.27, 0.22, 0.18]


def test_marginal_of_example_step():
    space = two_vertex_example().space
    np.testing.assert_allclose(marginalize(space, EXAMPLE_STEP, 0), [0.6, 0.4], atol=1e-15)
    np.testing.assert_allclose(marginalize(space, EXAMPLE_STEP, 1), [0.55, 0.45], atol=1e-15)


def test_marginal_grouping(rng):
    space = two_vertex_example().space
    x = rng.dirichlet(np.ones(4))
    assert marginalize(space, x, 0)[0] == pytest.approx(x[0] + x[1])
    assert marginalize(space, x, 1)[0] == pytest.approx(x[0] + x[2])
    np.testing.assert_allclose(marginalize(space, np.full(4, 0.25), 1), [0.5, 0.5])


def test_marginalize_batch(rng):
    m = Model.build([1, 2, 3], [], [[0.2, 0.8], [0.1, 0.3, 0.6], [0.5, 0.5]], alphabets=["Aa", "xyz", "Bb"])
    lam = rng.dirichlet(np.ones(m.n), 4)
    batch = marginalize(m.space, lam, 1)
    for row, x in zip(batch, lam):
        np.testing.assert_allclose(row, marginalize(m.space, x, 1))


def test_reduced_matrices():
    system = reduce(two_vertex_example(0.7, 0.5))
    np.testing.assert_allclose(system.matrices[0].a, [[0, 0.4], [-0.4, 0]], atol=1e-15)
    np.testing.assert_array_equal(system.matrices[1].a, np.zeros((2, 2)))
    m = Model.build([1], [], [[0.5, 0.3, 0.2]], alphabet="abc")
    a = reduce(m).matrices[0].a
    assert (a[0, 1], a[0, 2], a[1, 2]) == pytest.approx((0.25, 3 / 7, 0.2), abs=1e-15)


def test_reduced_matrix_is_canonical_for_one_component():
    m = Model.build([1, 2], [(1, 2)], [[0.1, 0.2, 0.3, 0.4]], alphabet="Aa")
    np.testing.assert_allclose(reduce(m).matrices[0].a, volterra_canonical(GeneratedOperator(m)).a, atol=1e-15)


def test_reduced_steps():
    system = reduce(two_vertex_example(0.7, 0.6))
    out = reduced_step(system, [[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(out[0], [0.6, 0.4], atol=1e-15)
    np.testing.assert_allclose(out[1], [0.55, 0.45], atol=1e-15)
    neutral = reduce(two_vertex_example(0.5, 0.5))
    np.testing.assert_allclose(reduced_step(neutral, [[0.3, 0.7], [0.9, 0.1]])[1], [0.9, 0.1])


def test_two_reduced_forms_agree(rng):
    m = Model.build([1, 2], [], [[0.1, 0.2, 0.3, 0.4], [0.05, 0.95]], alphabets=["abcd", "xy"])
    system = reduce(m)
    parts = [rng.dirichlet(np.ones(s)) for s in m.space.sizes]
    for u, v in zip(step_skew_form(system, parts), step_replicator_form(system, parts)):
        np.testing.assert_allclose(u, v, atol=1e-15)


def test_commutation_example():
    m = two_vertex_example()
    assert commutation_residual(m, np.full(4, 0.25)) <= 1e-12
    for k in range(4):
        assert commutation_residual(m, vertex(4, k)) == 0.0


def test_commutation_random_three_components():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        sizes = rng.integers(2, 5, 3)
        w = [rng.dirichlet(np.ones(s)) + 0.01 for s in sizes]
        w = [x / x.sum() for x in w]
        m = Model.build([1, 2, 3], [], w, alphabets=[[str(k) for k in range(s)] for s in sizes])
        worst = max(worst, commutation_residual(m, rng.dirichlet(np.ones(m.n))))
    assert worst <= 1e-12


def test_reconstruct_vertex_is_unique():
    rec = reconstruct(two_vertex_example().space, [[1, 0], [1, 0]])
    assert rec.unique and rec.dimension == 0
    np.testing.assert_array_equal(rec.product, [1, 0, 0, 0])


def test_reconstruct_interior_has_one_free_parameter():
    rec = reconstruct(two_vertex_example().space, [[0.6, 0.4], [0.55, 0.45]])
    assert rec.dimension == 1 and not rec.unique
    np.testing.assert_allclose(rec.product, EXAMPLE_STEP, atol=1e-15)


def test_reconstruct_bad_marginals():
    with pytest.raises(InconsistentMarginals):
        reconstruct(two_vertex_example().space, [[0.6, 0.5], [0.5, 0.5]])
    with pytest.raises(InconsistentMarginals):
        reconstruct(two_vertex_example().space, [[1.0, 0.0]])


def test_product_form():
    space = two_vertex_example().space
    assert is_product_form(space, product_state([[0.6, 0.4], [0.55, 0.45]]))
    assert not is_product_form(space, [0.5, 0, 0, 0.5])
    for k in range(4):
        assert is_product_form(space, vertex(4, k))


def test_run_reduced_matches_full_run():
    m = two_vertex_example(0.3, 0.6)
    system = reduce(m)
    runs = run_reduced(system, [[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(runs[0].final, [0, 1], atol=1e-9)
    np.testing.assert_allclose(runs[1].final, [1, 0], atol=1e-9)
