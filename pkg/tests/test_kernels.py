"""Compiled vs fallback kernels, checked against LAPACK as the oracle."""
import numpy as np
import pytest

from diqkd import _backend, _fallback


def _random_hermitian(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return x + x.conj().T


@pytest.mark.parametrize("n", [1, 2, 3, 4, 8, 16])
def test_jacobi_matches_lapack(kernels, rng, n):
    for _ in range(20):
        h = _random_hermitian(rng, n)
        w, v, _ = kernels.jacobi_eigh(h)
        assert np.allclose(np.sort(w), np.linalg.eigvalsh(h), atol=1e-12 * max(1, np.abs(h).max()))
        assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - h) <= 1e-10
        assert np.linalg.norm(v.conj().T @ v - np.eye(n)) <= 1e-10


def test_jacobi_degenerate_and_diagonal(kernels):
    h = np.diag([2.0, 2.0, -1.0, 0.0]).astype(complex)
    w, v, sweeps = kernels.jacobi_eigh(h)
    assert sweeps == 0
    assert np.allclose(w, [2, 2, -1, 0])
    assert np.allclose(v, np.eye(4))

    w, _, _ = kernels.jacobi_eigh(np.zeros((3, 3)))
    assert np.all(w == 0)


def test_jacobi_real_symmetric_textbook(kernels):
    a = np.array([[4.0, -30.0, 60.0, -35.0],
                  [-30.0, 300.0, -675.0, 420.0],
                  [60.0, -675.0, 1620.0, -1050.0],
                  [-35.0, 420.0, -1050.0, 700.0]])
    w, _, _ = kernels.jacobi_eigh(a)
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(a), rtol=1e-12)


def test_backends_agree_on_sampling(rng):
    kernels = _backend.available_backends()
    if len(kernels) < 2:
        pytest.skip("compiled extension not built")
    words = rng.integers(0, 2**64, size=(5000, 4), dtype=np.uint64)
    cum_a = np.array([0.5, 0.75, 1.0])
    cum_b = np.array([0.3, 1.0])
    tables = np.cumsum(rng.dirichlet(np.ones(4), size=(3, 2)), axis=-1)
    tables[..., -1] = 1.0
    outs = [k.sample_rounds(words, cum_a, cum_b, np.ascontiguousarray(tables), 0.5) for k in kernels.values()]
    for x, y in zip(*outs):
        assert np.array_equal(x, y)


def test_sampling_frequencies(kernels, rng):
    n = 200_000
    words = rng.integers(0, 2**64, size=(n, 4), dtype=np.uint64)
    p_table = np.array([0.1, 0.2, 0.3, 0.4])
    tables = np.ascontiguousarray(np.broadcast_to(np.cumsum(p_table), (3, 2, 4)))
    alice, bob, a, b, coin = kernels.sample_rounds(words, np.array([0.2, 0.5, 1.0]), np.array([0.5, 1.0]), tables, 0.25)
    assert np.allclose(np.bincount(alice, minlength=3) / n, [0.2, 0.3, 0.5], atol=0.005)
    assert np.allclose(np.bincount(bob, minlength=2) / n, [0.5, 0.5], atol=0.005)
    idx = (1 - a) // 2 * 2 + (1 - b) // 2
    assert np.allclose(np.bincount(idx, minlength=4) / n, p_table, atol=0.005)
    assert abs(coin.mean() - 0.25) < 0.005
    assert set(np.unique(a)) <= {-1, 1}


def test_backend_selected():
    assert _backend.BACKEND in ("compiled", "python")
    assert "python" in _backend.available_backends()
    assert _fallback.NAME == "python"
