import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensevec.embedstore import (
    LayerEmbeddingRecord,
    StoreHeader,
    average_vectors,
    load_store_dict,
    pool_layers,
    read_store,
    write_store,
)
from sensevec.errors import (
    BadMagic,
    EmptyInput,
    LayerCountMismatch,
    ShapeMismatch,
    TruncatedFile,
)
from sensevec.profiles import fixed_profile


def _records(n, layer_count=3, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    return [
        LayerEmbeddingRecord(f"rec{i:03d}", rng.normal(size=(layer_count, dim)).astype(np.float32))
        for i in range(n)
    ]


def test_round_trip_bit_exact(tmp_path):
    records = _records(1, layer_count=3, dim=4)
    path = tmp_path / "one.lmse"
    header = write_store(StoreHeader(3, 4, model_tag="toy-model"), records, path)
    assert header.record_count == 1
    got_header, got = read_store(path)
    got = list(got)
    assert got_header == header
    assert got[0].key == records[0].key
    assert got[0].matrix.tobytes() == records[0].matrix.tobytes()


def test_iteration_order_is_write_order(tmp_path):
    records = _records(7)
    path = tmp_path / "many.lmse"
    write_store(StoreHeader(3, 4), records, path)
    _, got = read_store(path)
    assert [r.key for r in got] == [r.key for r in records]


def test_zero_record_store_fixed_size(tmp_path):
    path_a, path_b = tmp_path / "a.lmse", tmp_path / "b.lmse"
    write_store(StoreHeader(3, 4, model_tag="same"), [], path_a)
    write_store(StoreHeader(5, 16, model_tag="same"), [], path_b)
    assert path_a.stat().st_size == path_b.stat().st_size  # header-only
    header, got = read_store(path_a)
    assert header.record_count == 0 and list(got) == []


def test_truncated_file(tmp_path):
    records = _records(3)
    path = tmp_path / "trunc.lmse"
    write_store(StoreHeader(3, 4), records, path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 10])
    _, got = read_store(path)
    with pytest.raises(TruncatedFile):
        list(got)


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 40)
    with pytest.raises(BadMagic):
        read_store(path)


def test_shape_mismatch_on_write(tmp_path):
    bad = [LayerEmbeddingRecord("r", np.zeros((2, 4), dtype=np.float32))]
    with pytest.raises(ShapeMismatch):
        write_store(StoreHeader(3, 4), bad, tmp_path / "bad.lmse")


def test_non_finite_rejected(tmp_path):
    matrix = np.zeros((3, 4), dtype=np.float32)
    matrix[1, 2] = np.nan
    with pytest.raises(ShapeMismatch):
        write_store(StoreHeader(3, 4), [LayerEmbeddingRecord("r", matrix)], tmp_path / "nan.lmse")


def test_load_store_dict(tmp_path):
    records = _records(4)
    path = tmp_path / "dict.lmse"
    write_store(StoreHeader(3, 4), records, path)
    _, by_key = load_store_dict(path)
    assert set(by_key) == {r.key for r in records}


def test_pool_layers_hand_case():
    matrix = np.array([[1, 0], [0, 1], [1, 1]], dtype=np.float32)
    pooled = pool_layers(matrix, np.array([0.2, 0.3, 0.5]))
    assert pooled.dtype == np.float64
    np.testing.assert_allclose(pooled, [0.7, 0.8], atol=1e-12)


def test_pool_layers_one_hot_and_uniform():
    rng = np.random.default_rng(1)
    matrix = rng.normal(size=(4, 8)).astype(np.float32)
    one_hot = np.zeros(4)
    one_hot[2] = 1.0  # reverse index -2
    np.testing.assert_allclose(pool_layers(matrix, one_hot), matrix[2].astype(np.float64))
    np.testing.assert_allclose(
        pool_layers(matrix, np.full(4, 0.25)), matrix.astype(np.float64).mean(axis=0), atol=1e-12
    )


def test_pool_layers_accepts_profile():
    matrix = np.ones((5, 3), dtype=np.float32)
    profile = fixed_profile("sum_lst4", 5)
    np.testing.assert_allclose(pool_layers(matrix, profile), [1, 1, 1], atol=1e-12)


def test_pool_layers_count_mismatch():
    with pytest.raises(LayerCountMismatch):
        pool_layers(np.ones((3, 2), dtype=np.float32), np.array([1.0, 0.0]))


@settings(max_examples=50, deadline=None)
@given(
    st.integers(2, 6),
    st.integers(1, 8),
    st.floats(-3, 3, allow_nan=False),
    st.floats(-3, 3, allow_nan=False),
)
def test_pool_layers_linearity(layers, dim, alpha, beta):
    rng = np.random.default_rng(layers * 100 + dim)
    x = rng.normal(size=(layers, dim))
    y = rng.normal(size=(layers, dim))
    w = rng.random(layers)
    lhs = pool_layers(alpha * x + beta * y, w)
    rhs = alpha * pool_layers(x, w) + beta * pool_layers(y, w)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_pool_layers_constant_rows_identity():
    vector = np.array([0.3, -2.0, 5.5])
    matrix = np.tile(vector, (6, 1))
    weights = np.random.default_rng(3).dirichlet(np.ones(6))  # sums to 1
    np.testing.assert_allclose(pool_layers(matrix, weights), vector, atol=1e-12)


def test_average_vectors():
    np.testing.assert_allclose(average_vectors([[1, 3], [3, 5]]), [2, 4])
    np.testing.assert_allclose(average_vectors([[1.5, -2]]), [1.5, -2])
    vector = np.array([0.7, -0.2, 9.0])
    np.testing.assert_allclose(average_vectors([vector, -vector]), [0, 0, 0], atol=1e-15)
    with pytest.raises(EmptyInput):
        average_vectors([])
