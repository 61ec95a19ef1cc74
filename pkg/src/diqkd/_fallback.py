"""Pure Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Semantics are identical; this module is what runs when the extension
was not built, or when ``DIQKD_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np

NAME = "python"


def jacobi_eigh(a, tol=1e-15, max_sweeps=64):
    A = np.array(a, dtype=np.complex128, copy=True)
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n), V, 0

    sweep = 0
    while sweep < max_sweeps:
        off = np.sum(np.abs(np.triu(A, 1)) ** 2)
        if math.sqrt(2.0 * off) <= tol * scale:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = abs(A[p, q])
                if g <= 1e-300:
                    continue
                ph = np.conj(A[p, q]) / g
                tau = (A[q, q].real - A[p, p].real) / (2.0 * g)
                if tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                jqp = -s * ph
                jqq = c * ph
                colp = A[:, p].copy()
                colq = A[:, q]
                A[:, p] = colp * c + colq * jqp
                A[:, q] = colp * s + colq * jqq
                rowp = A[p, :].copy()
                rowq = A[q, :]
                A[p, :] = c * rowp + np.conj(jqp) * rowq
                A[q, :] = s * rowp + np.conj(jqq) * rowq
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = vp * c + vq * jqp
                V[:, q] = vp * s + vq * jqq
    return np.real(np.diag(A)).copy(), V, sweep


def _unit(words):
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _pick(u, cum):
    # first index with u < cum[k]; the last bin absorbs rounding in cum[-1]
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, cum.shape[-1] - 1)


def sample_rounds(words, cum_alice, cum_bob, cum_tables, coin_prob):
    words = np.asarray(words, dtype=np.uint64)
    cum_alice = np.asarray(cum_alice, dtype=np.float64)
    cum_bob = np.asarray(cum_bob, dtype=np.float64)
    cum_tables = np.asarray(cum_tables, dtype=np.float64)

    alice = _pick(_unit(words[:, 0]), cum_alice).astype(np.int8)
    bob = _pick(_unit(words[:, 1]), cum_bob).astype(np.int8)
    u = _unit(words[:, 2])
    rows = cum_tables[alice, bob]
    o = np.minimum((u[:, None] >= rows).sum(axis=1), rows.shape[1] - 1)
    a_out = (1 - 2 * (o >> 1)).astype(np.int8)
    b_out = (1 - 2 * (o & 1)).astype(np.int8)
    coin = (_unit(words[:, 3]) < coin_prob).astype(np.uint8)
    return alice, bob, a_out, b_out, coin
