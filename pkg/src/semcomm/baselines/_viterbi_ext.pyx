# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Viterbi add-compare-select; same contract as ``_viterbi_py.viterbi_kernel``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def viterbi_kernel(const double[:, ::1] received, const long long[:, ::1] codes, int memory):
    cdef Py_ssize_t T = received.shape[0]
    cdef int n = received.shape[1]
    cdef int S = 1 << memory
    cdef int W = 1 << n
    cdef int half = (S >> 1) - 1
    cdef int shift = memory - 1
    cdef double[::1] pm = np.full(S, -INFINITY)
    cdef double[::1] nxt = np.empty(S)
    cdef double[::1] m = np.empty(W)
    cdef unsigned char[:, ::1] dec = np.empty((T, S), dtype=np.uint8)
    cdef unsigned char[::1] bits = np.empty(T, dtype=np.uint8)
    cdef Py_ssize_t t
    cdef int w, i, s, b, s0, state
    cdef double acc, a0, a1
    pm[0] = 0.0
    for t in range(T):
        for w in range(W):
            acc = 0.0
            for i in range(n):
                if (w >> (n - 1 - i)) & 1:
                    acc -= received[t, i]
                else:
                    acc += received[t, i]
            m[w] = acc
        for s in range(S):
            b = s >> shift
            s0 = (s & half) << 1
            a0 = pm[s0] + m[codes[s0, b]]
            a1 = pm[s0 | 1] + m[codes[s0 | 1, b]]
            if a1 > a0:
                nxt[s] = a1
                dec[t, s] = 1
            else:
                nxt[s] = a0
                dec[t, s] = 0
        pm, nxt = nxt, pm
    state = 0
    for t in range(T - 1, -1, -1):
        bits[t] = state >> shift
        state = ((state & half) << 1) | dec[t, state]
    return np.asarray(bits)
