# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; bit-identical to ``sjpc._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint32_t, uint64_t, int64_t, int32_t
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy
from libc.math cimport floor

cnp.import_array()

NAME = "cython"

cdef extern from *:
    """
    #include <stdint.h>
    #include <string.h>
    #define SJPC_P ((uint64_t)0x1FFFFFFFFFFFFFFFULL)
    #define SJPC_GOLDEN ((uint64_t)0x9E3779B97F4A7C15ULL)

    static inline uint64_t sjpc_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline uint64_t sjpc_next(uint64_t *state) {
        *state += SJPC_GOLDEN;
        return sjpc_mix64(*state);
    }
    static inline double sjpc_random(uint64_t *state) {
        return (double)(sjpc_next(state) >> 11) * (1.0 / 9007199254740992.0);
    }
    static inline uint64_t sjpc_below(uint64_t *state, uint64_t bound) {
        __uint128_t m = (__uint128_t)sjpc_next(state) * bound;
        uint64_t low = (uint64_t)m;
        if (low < bound) {
            uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = (__uint128_t)sjpc_next(state) * bound;
                low = (uint64_t)m;
            }
        }
        return (uint64_t)(m >> 64);
    }
    static inline uint64_t sjpc_mulmod(uint64_t a, uint64_t b) {
        __uint128_t z = (__uint128_t)a * b;
        uint64_t r = ((uint64_t)z & SJPC_P) + (uint64_t)(z >> 61);
        return r >= SJPC_P ? r - SJPC_P : r;
    }
    static inline uint64_t sjpc_addmod(uint64_t a, uint64_t b) {
        uint64_t r = a + b;
        return r >= SJPC_P ? r - SJPC_P : r;
    }
    static inline uint64_t sjpc_poly(const uint64_t *c, uint64_t key) {
        uint64_t x = (key & SJPC_P) + (key >> 61);
        if (x >= SJPC_P) x -= SJPC_P;
        uint64_t h = c[3];
        h = sjpc_addmod(sjpc_mulmod(h, x), c[2]);
        h = sjpc_addmod(sjpc_mulmod(h, x), c[1]);
        h = sjpc_addmod(sjpc_mulmod(h, x), c[0]);
        return h;
    }
    static inline uint64_t sjpc_murmur64a(const uint8_t *data, size_t len, uint64_t seed) {
        const uint64_t m = 0xC6A4A7935BD1E995ULL;
        const int r = 47;
        uint64_t h = seed ^ (len * m);
        size_t nblocks = len / 8;
        for (size_t i = 0; i < nblocks; i++) {
            uint64_t k;
            memcpy(&k, data + 8 * i, 8);
            k *= m; k ^= k >> r; k *= m;
            h ^= k; h *= m;
        }
        const uint8_t *tail = data + 8 * nblocks;
        switch (len & 7) {
        case 7: h ^= (uint64_t)tail[6] << 48;
        case 6: h ^= (uint64_t)tail[5] << 40;
        case 5: h ^= (uint64_t)tail[4] << 32;
        case 4: h ^= (uint64_t)tail[3] << 24;
        case 3: h ^= (uint64_t)tail[2] << 16;
        case 2: h ^= (uint64_t)tail[1] << 8;
        case 1: h ^= (uint64_t)tail[0];
                h *= m;
        }
        h ^= h >> r; h *= m; h ^= h >> r;
        return h;
    }
    static inline void sjpc_put32(uint8_t *p, uint32_t v) {
        for (int i = 0; i < 4; i++) p[i] = (uint8_t)(v >> (8 * i));
    }
    static inline void sjpc_put64(uint8_t *p, uint64_t v) {
        for (int i = 0; i < 8; i++) p[i] = (uint8_t)(v >> (8 * i));
    }
    """
    uint64_t sjpc_mix64(uint64_t z) nogil
    uint64_t sjpc_next(uint64_t *state) nogil
    double sjpc_random(uint64_t *state) nogil
    uint64_t sjpc_below(uint64_t *state, uint64_t bound) nogil
    uint64_t sjpc_poly(const uint64_t *c, uint64_t key) nogil
    uint64_t sjpc_murmur64a(const uint8_t *data, size_t length, uint64_t seed) nogil
    void sjpc_put32(uint8_t *p, uint32_t v) nogil
    void sjpc_put64(uint8_t *p, uint64_t v) nogil

cdef uint64_t RECORD_STRIDE = 0xD1B54A32D192ED03ULL


def mix64(z):
    return sjpc_mix64(<uint64_t>(z & 0xFFFFFFFFFFFFFFFF))


def record_state(sample_key, index):
    cdef uint64_t key = <uint64_t>(sample_key & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t idx = <uint64_t>((index + 1) & 0xFFFFFFFFFFFFFFFF)
    return sjpc_mix64(key ^ (idx * RECORD_STRIDE))


def fingerprint(const uint8_t[::1] data, seed):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef size_t n = data.shape[0]
    if n == 0:
        return sjpc_murmur64a(NULL, 0, s)
    return sjpc_murmur64a(&data[0], n, s)


def poly_hash(coeffs, key):
    cdef uint64_t c[4]
    for i in range(4):
        c[i] = <uint64_t>int(coeffs[i])
    return sjpc_poly(c, <uint64_t>(int(key) & 0xFFFFFFFFFFFFFFFF))


def emit_fingerprints(const uint8_t[::1] buf, const int64_t[::1] starts,
                      const int64_t[::1] ends, Py_ssize_t n_rec, int d, int s,
                      double r, fp_seed, sample_key, first_index,
                      const int32_t[:, ::1] combos, const int64_t[::1] level_offsets):
    cdef int n_levels = d - s + 1
    cdef Py_ssize_t per_record = 0
    cdef Py_ssize_t lvl, size, max_size = 0
    for lvl in range(n_levels):
        size = level_offsets[lvl + 1] - level_offsets[lvl]
        per_record += size
        if size > max_size:
            max_size = size
    cdef cnp.ndarray[uint8_t, ndim=1] levels_arr = np.empty(n_rec * per_record, dtype=np.uint8)
    cdef cnp.ndarray[uint64_t, ndim=1] fps_arr = np.empty(n_rec * per_record, dtype=np.uint64)
    cdef uint8_t[::1] out_lv = levels_arr
    cdef uint64_t[::1] out_fp = fps_arr
    cdef uint64_t fseed = <uint64_t>(fp_seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t skey = <uint64_t>(sample_key & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t idx0 = <uint64_t>(first_index & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t i, base, off, m, j, q, sel, tmp
    cdef int k, c, col
    cdef uint64_t state
    cdef double target, fl, frac
    cdef size_t need, cap = 4096, pos, flen
    cdef uint8_t *scratch = <uint8_t *>malloc(cap)
    cdef Py_ssize_t *perm = <Py_ssize_t *>malloc((max_size + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *swaps = <Py_ssize_t *>malloc((max_size + 1) * sizeof(Py_ssize_t))
    cdef const uint8_t *src
    if scratch == NULL or perm == NULL or swaps == NULL:
        free(scratch); free(perm); free(swaps)
        raise MemoryError()
    try:
        with nogil:
            for q in range(max_size):
                perm[q] = q
            for i in range(n_rec):
                base = i * d
                state = sjpc_mix64(skey ^ ((idx0 + <uint64_t>i + 1) * RECORD_STRIDE))
                for lvl in range(n_levels):
                    k = s + <int>lvl
                    off = level_offsets[lvl]
                    size = level_offsets[lvl + 1] - off
                    target = r * <double>size
                    fl = floor(target)
                    m = <Py_ssize_t>fl
                    frac = target - fl
                    if frac > 0.0 and sjpc_random(&state) < frac:
                        m += 1
                    if m > size:
                        m = size
                    if m < size:
                        for q in range(m):
                            j = q + <Py_ssize_t>sjpc_below(&state, <uint64_t>(size - q))
                            swaps[q] = j
                            tmp = perm[q]; perm[q] = perm[j]; perm[j] = tmp
                    for q in range(m):
                        sel = perm[q] if m < size else q
                        need = 12
                        for c in range(k):
                            col = combos[off + sel, c]
                            need += 8 + <size_t>(ends[base + col] - starts[base + col])
                        if need > cap:
                            while cap < need:
                                cap *= 2
                            scratch = <uint8_t *>realloc(scratch, cap)
                            if scratch == NULL:
                                with gil:
                                    raise MemoryError()
                        sjpc_put32(scratch, <uint32_t>k)
                        sjpc_put64(scratch + 4, <uint64_t>sel)
                        pos = 12
                        for c in range(k):
                            col = combos[off + sel, c]
                            flen = <size_t>(ends[base + col] - starts[base + col])
                            sjpc_put64(scratch + pos, <uint64_t>flen)
                            pos += 8
                            if flen > 0:
                                src = &buf[starts[base + col]]
                                memcpy(scratch + pos, src, flen)
                                pos += flen
                        out_fp[count] = sjpc_murmur64a(scratch, pos, fseed)
                        out_lv[count] = <uint8_t>lvl
                        count += 1
                    if m < size:
                        # undo the swaps so perm is the identity again
                        q = m - 1
                        while q >= 0:
                            j = swaps[q]
                            tmp = perm[q]; perm[q] = perm[j]; perm[j] = tmp
                            q -= 1
    finally:
        free(scratch); free(perm); free(swaps)
    return levels_arr[:count].copy(), fps_arr[:count].copy()


def sketch_update(int64_t[:, ::1] counters, const uint64_t[:, ::1] bucket_coef,
                  const uint64_t[:, ::1] sign_coef, const uint64_t[::1] keys):
    cdef Py_ssize_t depth = counters.shape[0]
    cdef uint64_t width = <uint64_t>counters.shape[1]
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t row, i
    cdef uint64_t key, bucket
    with nogil:
        for row in range(depth):
            for i in range(n):
                key = keys[i]
                bucket = sjpc_poly(&bucket_coef[row, 0], key) % width
                if sjpc_poly(&sign_coef[row, 0], key) & 1:
                    counters[row, bucket] += 1
                else:
                    counters[row, bucket] -= 1


def split_lines(const uint8_t[::1] buf, int delimiter, int d):
    cdef Py_ssize_t n = buf.shape[0]
    cdef Py_ssize_t n_lines = 0, i
    with nogil:
        for i in range(n):
            if buf[i] == 10:
                n_lines += 1
    if n > 0 and buf[n - 1] != 10:
        n_lines += 1
    cdef cnp.ndarray[int64_t, ndim=1] starts_arr = np.empty(n_lines * d, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] ends_arr = np.empty(n_lines * d, dtype=np.int64)
    cdef int64_t[::1] st = starts_arr
    cdef int64_t[::1] en = ends_arr
    cdef Py_ssize_t line = 0, field = 0, fstart = 0, bad = -1
    cdef uint8_t ch
    with nogil:
        i = 0
        while i < n:
            ch = buf[i]
            if ch == delimiter and ch != 10:
                if field >= d - 1:
                    bad = line
                    break
                st[line * d + field] = fstart
                en[line * d + field] = i
                field += 1
                fstart = i + 1
            elif ch == 10:
                if field != d - 1:
                    bad = line
                    break
                st[line * d + field] = fstart
                en[line * d + field] = i
                line += 1
                field = 0
                fstart = i + 1
            i += 1
        if bad < 0 and fstart < n:
            if field != d - 1:
                bad = line
            else:
                st[line * d + field] = fstart
                en[line * d + field] = n
                line += 1
    if bad >= 0:
        return starts_arr[:bad * d], ends_arr[:bad * d], bad, bad
    return starts_arr, ends_arr, line, -1
