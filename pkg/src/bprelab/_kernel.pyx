# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled replica-stepping kernel.

Advances one population trajectory generation by generation, drawing the
environment state, then the offspring sum (multinomial category counts while
the population is at or below the exact-arithmetic threshold, a rounded
normal above it when the approximate mode is enabled).  The random stream is
consumed exactly like the pure-Python engine in ``_engine_py``: one uniform
for the environment, then one multinomial or one normal draw, so both
engines produce bit-identical trajectories from the same bit generator.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport floor, sqrt
from libc.stdint cimport int64_t, uint8_t
from libc.string cimport memset

from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    binomial_t,
    random_multinomial,
    random_normal,
    random_standard_uniform,
)

import numpy as np


def simulate_into(
    object capsule,
    double[::1] z_out,
    int64_t[::1] env_out,
    uint8_t[::1] approx_out,
    int64_t[::1] counts_buf,
    int64_t[::1] values,
    double[::1] probs,
    int64_t[::1] offsets,
    double[::1] means,
    double[::1] variances,
    double[::1] cumw,
    double threshold,
    bint clt_mode,
):
    """Fill one trajectory row in place; see ``_engine_py.simulate_into``.

    Returns 0 on completion, or k+1 if the step out of generation k required
    advancing from a population above ``threshold`` with the approximate
    mode disabled (the caller maps that to a reject).
    """
    cdef const char *capsule_name = "BitGenerator"
    if not PyCapsule_IsValid(capsule, capsule_name):
        raise ValueError("expected a BitGenerator capsule")
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(capsule, capsule_name)

    cdef binomial_t binom
    memset(&binom, 0, sizeof(binom))

    cdef Py_ssize_t n_steps = env_out.shape[0]
    cdef Py_ssize_t k, j, e, d, off
    cdef double u, z, draw, mean, sd
    cdef int64_t zint, total

    z = 1.0
    z_out[0] = 1.0
    approx_out[0] = 0

    for k in range(n_steps):
        u = random_standard_uniform(rng)
        e = 0
        while u >= cumw[e]:
            e += 1
        env_out[k] = e

        if z <= threshold:
            zint = <int64_t> z
            off = offsets[e]
            d = offsets[e + 1] - off
            memset(&counts_buf[0], 0, d * sizeof(int64_t))
            random_multinomial(rng, zint, &counts_buf[0], &probs[off], d, &binom)
            total = 0
            for j in range(d):
                total += counts_buf[j] * values[off + j]
            z = <double> total
            approx_out[k + 1] = 0
        elif clt_mode:
            mean = z * means[e]
            sd = sqrt(z * variances[e])
            draw = random_normal(rng, mean, sd)
            z = floor(draw + 0.5)
            if z < 1.0:
                z = 1.0
            approx_out[k + 1] = 1
        else:
            return k + 1
        z_out[k + 1] = z

    return 0
