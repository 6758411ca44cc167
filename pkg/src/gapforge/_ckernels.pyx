# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""int64 versions of the integer kernels in ``_pykernels``.

Every product and difference is overflow-checked; on overflow the
functions raise ``OverflowError`` and the caller retries with the
arbitrary-precision Python implementation.
"""

from libc.stdlib cimport malloc, free
from libc.stdint cimport int64_t

cdef extern from *:
    """
    static inline int gf_mul_ovf(long long a, long long b, long long *r) {
        return __builtin_mul_overflow(a, b, r);
    }
    static inline int gf_sub_ovf(long long a, long long b, long long *r) {
        return __builtin_sub_overflow(a, b, r);
    }
    """
    bint gf_mul_ovf(long long a, long long b, long long *r) nogil
    bint gf_sub_ovf(long long a, long long b, long long *r) nogil


cdef int64_t* _load(rows, Py_ssize_t n) except NULL:
    cdef int64_t* a = <int64_t*> malloc(n * n * sizeof(int64_t) + 1)
    cdef Py_ssize_t i, j
    if a == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            r = rows[i]
            for j in range(n):
                a[i * n + j] = r[j]
    except OverflowError:
        free(a)
        raise
    return a


cdef inline int64_t _absll(int64_t v) nogil:
    return -v if v < 0 else v


def int_inertia(rows):
    cdef Py_ssize_t n = len(rows)
    cdef int64_t* a = _load(rows, n)
    cdef char* done = <char*> malloc(n + 1)
    cdef Py_ssize_t i, j, k, piv, left
    cdef int64_t p, prev = 1, best, v, aip
    cdef long long t1, t2, t3
    cdef int npos = 0, nneg = 0
    cdef bint stalled = False, overflow = False
    if done == NULL:
        free(a)
        raise MemoryError()
    for i in range(n):
        done[i] = 0
    left = n
    with nogil:
        while left > 0:
            piv = -1
            best = 0
            for k in range(n):
                if done[k]:
                    continue
                v = a[k * n + k]
                if v != 0 and (piv < 0 or _absll(v) < best):
                    piv = k
                    best = _absll(v)
            if piv < 0:
                for i in range(n):
                    if done[i]:
                        continue
                    for j in range(n):
                        if not done[j] and a[i * n + j] != 0:
                            stalled = True
                break
            p = a[piv * n + piv]
            if (p > 0) == (prev > 0):
                npos += 1
            else:
                nneg += 1
            done[piv] = 1
            left -= 1
            for i in range(n):
                if done[i]:
                    continue
                aip = a[i * n + piv]
                for j in range(i, n):
                    if done[j]:
                        continue
                    if gf_mul_ovf(p, a[i * n + j], &t1) or gf_mul_ovf(aip, a[piv * n + j], &t2) \
                            or gf_sub_ovf(t1, t2, &t3):
                        overflow = True
                        break
                    v = t3 // prev
                    a[i * n + j] = v
                    a[j * n + i] = v
                if overflow:
                    break
            if overflow:
                break
            prev = p
    free(a)
    free(done)
    if overflow:
        raise OverflowError("int64 overflow in inertia kernel")
    return npos, nneg, bool(stalled)


def int_det(rows):
    cdef Py_ssize_t n = len(rows)
    if n == 0:
        return 1
    cdef int64_t* a = _load(rows, n)
    cdef Py_ssize_t i, j, k
    cdef int64_t p, prev = 1, aik, tmp
    cdef long long t1, t2, t3
    cdef int sign = 1
    cdef bint overflow = False, singular = False
    with nogil:
        for k in range(n - 1):
            if a[k * n + k] == 0:
                for i in range(k + 1, n):
                    if a[i * n + k] != 0:
                        for j in range(n):
                            tmp = a[k * n + j]
                            a[k * n + j] = a[i * n + j]
                            a[i * n + j] = tmp
                        sign = -sign
                        break
                else:
                    singular = True
                    break
            p = a[k * n + k]
            for i in range(k + 1, n):
                aik = a[i * n + k]
                for j in range(k + 1, n):
                    if gf_mul_ovf(p, a[i * n + j], &t1) or gf_mul_ovf(aik, a[k * n + j], &t2) \
                            or gf_sub_ovf(t1, t2, &t3):
                        overflow = True
                        break
                    a[i * n + j] = t3 // prev
                if overflow:
                    break
            if overflow:
                break
            prev = p
    if overflow:
        free(a)
        raise OverflowError("int64 overflow in determinant kernel")
    if singular:
        free(a)
        return 0
    result = sign * a[n * n - 1]
    free(a)
    return result
