import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lethargy.spaces import (
    Chain,
    DimensionMismatchError,
    NormSpec,
    Subspace,
    as_vector,
    contains,
    coordinate_chain,
    norm_eval,
    validate_chain,
)

P_VALUES = [1.0, 1.5, 2.0, 3.0, math.inf]


def test_norm_eval_examples():
    assert norm_eval([3.0, 4.0], NormSpec(2)) == pytest.approx(5.0)
    assert norm_eval([1.0, -1.0], NormSpec(math.inf)) == pytest.approx(1.0)
    assert norm_eval([1.0, -1.0, 2.0], NormSpec(1)) == pytest.approx(4.0)


def test_norm_eval_zero_iff_zero():
    assert norm_eval([0.0, 0.0], NormSpec(3)) == 0.0
    assert norm_eval([0.0, 1e-30], NormSpec(3)) > 0.0


def test_norm_spec_rejects_bad_exponent():
    with pytest.raises(ValueError):
        NormSpec(0.5)


def test_dual_exponents():
    assert NormSpec(2).dual_p == 2.0
    assert NormSpec(1).dual_p == math.inf
    assert NormSpec(math.inf).dual_p == 1.0
    assert NormSpec(1.5).dual_p == pytest.approx(3.0)


vectors = st.lists(
    st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
    min_size=1, max_size=8,
)


@settings(max_examples=100, deadline=None)
@given(vectors, st.floats(-100, 100), st.sampled_from(P_VALUES))
def test_norm_homogeneity(entries, lam, p):
    x = np.array(entries)
    norm = NormSpec(p)
    lhs = norm_eval(lam * x, norm)
    rhs = abs(lam) * norm_eval(x, norm)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(vectors, st.sampled_from(P_VALUES), st.randoms(use_true_random=False))
def test_norm_triangle_inequality(entries, p, rnd):
    x = np.array(entries)
    y = np.array([rnd.uniform(-1e6, 1e6) for _ in entries])
    norm = NormSpec(p)
    s = norm_eval(x, norm) + norm_eval(y, norm)
    assert norm_eval(x + y, norm) <= s * (1 + 1e-12) + 1e-12


def test_as_vector_validation():
    with pytest.raises(ValueError):
        as_vector([[1.0, 2.0]])
    with pytest.raises(ValueError):
        as_vector([1.0, np.nan])
    with pytest.raises(DimensionMismatchError):
        as_vector([1.0, 2.0], dim=3)


def test_subspace_rejects_dependent_columns():
    with pytest.raises(ValueError, match="dependent"):
        Subspace(np.array([[1.0, 2.0], [0.0, 0.0]]))


def test_zero_subspace():
    Z = Subspace.zero(3)
    assert Z.rank == 0
    assert contains(Z, [0.0, 0.0, 0.0])
    assert not contains(Z, [1.0, 0.0, 0.0])


def test_contains_examples():
    Y = Subspace(np.array([[1.0], [0.0]]))
    assert contains(Y, [2.0, 0.0], 1e-9)
    assert not contains(Y, [0.0, 1.0], 1e-9)


def test_contains_basis_columns():
    rng = np.random.default_rng(3)
    for _ in range(10):
        B = rng.standard_normal((6, 3))
        Y = Subspace(B)
        for j in range(3):
            assert contains(Y, B[:, j])


def test_orthonormalization_is_deterministic():
    B = np.random.default_rng(5).standard_normal((5, 2))
    a = Subspace(B).basis
    b = Subspace(B.copy()).basis
    assert np.array_equal(a, b)
    # sign convention: dominant entry of every column is non-negative
    for j in range(a.shape[1]):
        assert a[np.argmax(np.abs(a[:, j])), j] >= 0


def test_validate_chain_pass():
    chain = coordinate_chain(3, 2, NormSpec(2))
    rep = validate_chain(chain)
    assert rep.passes
    assert all(pair.ok for pair in rep.pairs)
    assert [Y.rank for Y in chain.levels] == [1, 2]


def test_validate_chain_not_nested():
    e = np.eye(2)
    chain = Chain(2, NormSpec(2), (Subspace(e[:, :1]), Subspace(e[:, 1:])))
    rep = validate_chain(chain)
    assert not rep.passes
    assert "not nested" in rep.failure


def test_validate_chain_not_strict():
    b = np.array([[1.0], [0.0]])
    chain = Chain(2, NormSpec(2), (Subspace(b), Subspace(2.0 * b)))
    rep = validate_chain(chain)
    assert not rep.passes
    assert "not strict" in rep.failure


def test_chain_level_indexing():
    chain = coordinate_chain(4, 2, NormSpec(2))
    assert chain.level(1).rank == 1
    assert chain.level(3).rank == 4  # one past the end: full ambient space
    with pytest.raises(IndexError):
        chain.level(4)
    with pytest.raises(IndexError):
        chain.level(0)


def test_chain_ambient_mismatch():
    with pytest.raises(DimensionMismatchError):
        Chain(3, NormSpec(2), (Subspace(np.eye(2)[:, :1]),))
