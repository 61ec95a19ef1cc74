# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: cyclic complex Jacobi and per-round outcome sampling.

Both functions mirror :mod:`diqkd._fallback` exactly; the fallback is the
reference and the test-suite checks the two against each other.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t, int8_t, uint8_t

cnp.import_array()

NAME = "compiled"

cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex conj(double complex)
    double creal(double complex)


def jacobi_eigh(a, double tol=1e-15, int max_sweeps=64):
    """Eigen-decompose a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v, sweeps)`` with eigenvalues unsorted.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] A = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] V = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] av = A
    cdef double complex[:, ::1] vv = V
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0
    cdef double off, scale, g, tau, t, c, s, app, aqq
    cdef double complex ph, akp, akq, apk, aqk, jqp, jqq

    scale = 0.0
    for p in range(n):
        for q in range(n):
            scale += creal(av[p, q] * conj(av[p, q]))
    scale = sqrt(scale)
    if scale == 0.0:
        return np.zeros(n), V, 0

    with nogil:
        while sweep < max_sweeps:
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += creal(av[p, q] * conj(av[p, q]))
            if sqrt(2.0 * off) <= tol * scale:
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    g = cabs(av[p, q])
                    if g <= 1e-300:
                        continue
                    ph = conj(av[p, q]) / g
                    app = creal(av[p, p])
                    aqq = creal(av[q, q])
                    tau = (aqq - app) / (2.0 * g)
                    if tau >= 0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    # J = [[c, s], [-s*ph, c*ph]] on (p, q)
                    jqp = -s * ph
                    jqq = c * ph
                    for k in range(n):
                        akp = av[k, p]
                        akq = av[k, q]
                        av[k, p] = akp * c + akq * jqp
                        av[k, q] = akp * s + akq * jqq
                    for k in range(n):
                        apk = av[p, k]
                        aqk = av[q, k]
                        av[p, k] = c * apk + conj(jqp) * aqk
                        av[q, k] = s * apk + conj(jqq) * aqk
                    av[p, q] = 0.0
                    av[q, p] = 0.0
                    av[p, p] = creal(av[p, p])
                    av[q, q] = creal(av[q, q])
                    for k in range(n):
                        akp = vv[k, p]
                        akq = vv[k, q]
                        vv[k, p] = akp * c + akq * jqp
                        vv[k, q] = akp * s + akq * jqq

    w = np.empty(n)
    for p in range(n):
        w[p] = creal(av[p, p])
    return w, V, sweep


cdef inline double _unit(uint64_t word) nogil:
    return <double>(word >> 11) * (1.0 / 9007199254740992.0)


cdef inline int _pick(double u, const double[::1] cum) nogil:
    cdef int k = 0
    cdef int last = cum.shape[0] - 1
    while k < last and u >= cum[k]:
        k += 1
    return k


def sample_rounds(const uint64_t[:, ::1] words, const double[::1] cum_alice,
                  const double[::1] cum_bob, const double[:, :, ::1] cum_tables,
                  double coin_prob):
    """Turn four raw words per round into settings, outcomes and a coin bit.

    ``cum_tables[i, j]`` is the cumulative distribution over the outcome
    index ``2*ia + ib`` (index 0 means +1, 1 means -1) for setting pair
    ``(i, j)``.
    """
    cdef Py_ssize_t n = words.shape[0]
    cdef Py_ssize_t r
    cdef int i, j, o
    alice = np.empty(n, dtype=np.int8)
    bob = np.empty(n, dtype=np.int8)
    a_out = np.empty(n, dtype=np.int8)
    b_out = np.empty(n, dtype=np.int8)
    coin = np.empty(n, dtype=np.uint8)
    cdef int8_t[::1] al = alice
    cdef int8_t[::1] bo = bob
    cdef int8_t[::1] ao = a_out
    cdef int8_t[::1] bb = b_out
    cdef uint8_t[::1] co = coin
    with nogil:
        for r in range(n):
            i = _pick(_unit(words[r, 0]), cum_alice)
            j = _pick(_unit(words[r, 1]), cum_bob)
            o = _pick(_unit(words[r, 2]), cum_tables[i, j])
            al[r] = i
            bo[r] = j
            ao[r] = 1 - 2 * (o >> 1)
            bb[r] = 1 - 2 * (o & 1)
            co[r] = 1 if _unit(words[r, 3]) < coin_prob else 0
    return alice, bob, a_out, b_out, coin
