# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled block-race kernel.

Same contract and random stream as ``race_py.race_counts``: one
``next_double`` per walk step, R extends iff ``u < p``.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t


def race_counts(bit_generator, double p, int threshold, long long races):
    cdef bitgen_t *rng
    cdef const char *name = "BitGenerator"
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, name):
        raise ValueError("invalid bit generator capsule")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, name)

    cdef long long i, r_wins = 0, i_folds = 0
    cdef int lead, first
    with bit_generator.lock, nogil:
        for i in range(races):
            lead = 0
            first = 0
            while True:
                if rng.next_double(rng.state) < p:
                    lead += 1
                else:
                    lead -= 1
                if first == 0:
                    first = lead
                if lead == 1:
                    r_wins += 1
                    if first == -1:
                        i_folds += 1
                    break
                if lead == -threshold:
                    break
    return r_wins, i_folds
