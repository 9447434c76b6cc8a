"""Pure-Python replica-stepping engine.

Fallback for when the compiled kernel is unavailable.  It consumes the
random stream in exactly the same order and through the same distributions
as the compiled kernel (one uniform for the environment state, then one
multinomial or one normal per generation), so the two engines produce
bit-identical trajectories from identically seeded bit generators.
"""

from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np


def simulate_into(bitgen, z_out, env_out, approx_out, env_data, threshold, clt_mode):
    """Fill one trajectory row in place.

    ``z_out`` (float64, n+1), ``env_out`` (int64, n), ``approx_out``
    (uint8, n+1) are preallocated rows.  Returns 0 on completion, or k+1 if
    the step out of generation k needed to advance a population above
    ``threshold`` with the approximate mode disabled.
    """
    rng = np.random.Generator(bitgen)
    cumw = env_data.cumw_list
    probs = env_data.probs_by_state
    values = env_data.values_by_state
    means = env_data.means
    variances = env_data.variances

    n_steps = len(env_out)
    z = 1  # exact integer while at or below the threshold
    z_out[0] = 1.0
    approx_out[0] = 0

    for k in range(n_steps):
        u = rng.random()
        e = bisect_right(cumw, u)
        env_out[k] = e

        if z <= threshold:
            counts = rng.multinomial(z, probs[e])
            z = int(counts @ values[e])
            approx_out[k + 1] = 0
        elif clt_mode:
            draw = rng.normal(z * means[e], math.sqrt(z * variances[e]))
            z = int(math.floor(draw + 0.5))
            if z < 1:
                z = 1
            approx_out[k + 1] = 1
        else:
            return k + 1
        z_out[k + 1] = float(z)

    return 0
