"""Compiled inner loops for the packed sketches.

Counters live little-endian in uint64 words: cell ``i`` is at word
``i // per_word``, bit offset ``(i % per_word) * cell_bits``.  Keys arrive
as int64 (two's-complement image of the unsigned key).
"""

import numpy as np
from numba import njit

_M1 = np.uint64(0xFF51AFD7ED558CCD)
_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_S33 = np.uint64(33)
_S32 = np.uint64(32)
_LO32 = np.uint64(0xFFFFFFFF)
_ONE = np.uint64(1)


@njit(cache=True, inline="always")
def _hash(key, skey):
    x = np.uint64(key) ^ skey
    x ^= x >> _S33
    x *= _M1
    x ^= x >> _S33
    x *= _M2
    x ^= x >> _S33
    return x & _LO32, (x >> _S32) | _ONE


@njit(cache=True, inline="always")
def _index(h1, h2, j, width, rows):
    idx = (h1 + np.uint64(j) * h2) % np.uint64(width)
    if rows:
        idx += np.uint64(j * width)
    return idx


@njit(cache=True)
def indexes(key, skey, k, width, rows):
    h1, h2 = _hash(key, skey)
    out = np.empty(k, np.int64)
    for j in range(k):
        out[j] = _index(h1, h2, j, width, rows)
    return out


@njit(cache=True)
def sketch_estimate(words, key, skey, k, width, rows, cell_bits):
    h1, h2 = _hash(key, skey)
    per_word = 64 // cell_bits
    mask = np.uint64((1 << cell_bits) - 1)
    low = np.uint64(255)
    for j in range(k):
        idx = _index(h1, h2, j, width, rows)
        w = idx // np.uint64(per_word)
        shift = (idx % np.uint64(per_word)) * np.uint64(cell_bits)
        v = (words[w] >> shift) & mask
        if v < low:
            low = v
    return int(low)


@njit(cache=True)
def sketch_record(words, key, skey, k, width, rows, minimal, cell_bits, cap):
    h1, h2 = _hash(key, skey)
    per_word = 64 // cell_bits
    mask = np.uint64((1 << cell_bits) - 1)
    ucap = np.uint64(cap)
    ws = np.empty(k, np.uint64)
    shifts = np.empty(k, np.uint64)
    vals = np.empty(k, np.uint64)
    low = np.uint64(255)
    for j in range(k):
        idx = _index(h1, h2, j, width, rows)
        w = idx // np.uint64(per_word)
        shift = (idx % np.uint64(per_word)) * np.uint64(cell_bits)
        v = (words[w] >> shift) & mask
        ws[j] = w
        shifts[j] = shift
        vals[j] = v
        if v < low:
            low = v
    if minimal and low >= ucap:
        return
    for j in range(k):
        v = vals[j]
        if minimal:
            if v != low:
                continue
        elif v >= ucap:
            continue
        dup = False
        for i in range(j):
            if ws[i] == ws[j] and shifts[i] == shifts[j]:
                dup = True
                break
        if not dup:
            words[ws[j]] += _ONE << shifts[j]


@njit(cache=True)
def bloom_insert(bits, key, skey, k, m):
    h1, h2 = _hash(key, skey)
    present = True
    for j in range(k):
        pos = (h1 + np.uint64(j) * h2) % np.uint64(m)
        w = pos >> np.uint64(6)
        b = _ONE << (pos & np.uint64(63))
        if not bits[w] & b:
            present = False
            bits[w] |= b
    return present


@njit(cache=True)
def bloom_contains(bits, key, skey, k, m):
    h1, h2 = _hash(key, skey)
    for j in range(k):
        pos = (h1 + np.uint64(j) * h2) % np.uint64(m)
        if not bits[pos >> np.uint64(6)] & (_ONE << (pos & np.uint64(63))):
            return False
    return True


@njit(cache=True)
def gated_record(dk_bits, dk_skey, dk_k, dk_m,
                 words, key, skey, k, width, rows, minimal, cell_bits, cap):
    if bloom_insert(dk_bits, key, dk_skey, dk_k, dk_m):
        sketch_record(words, key, skey, k, width, rows, minimal, cell_bits, cap)


@njit(cache=True)
def gated_estimate(dk_bits, dk_skey, dk_k, dk_m,
                   words, key, skey, k, width, rows, cell_bits, limit):
    v = sketch_estimate(words, key, skey, k, width, rows, cell_bits)
    if bloom_contains(dk_bits, key, dk_skey, dk_k, dk_m):
        v = min(v + 1, limit)
    return v


@njit(cache=True)
def unpack(words, count, cell_bits):
    per_word = 64 // cell_bits
    mask = np.uint64((1 << cell_bits) - 1)
    out = np.empty(count, np.int64)
    for i in range(count):
        out[i] = (words[i // per_word] >> np.uint64((i % per_word) * cell_bits)) & mask
    return out
