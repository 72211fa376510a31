"""Seeded random streams.

Every stochastic routine draws from ``numpy.random.Generator`` backed by PCG64.
A master seed expands to independent per-task streams with
``SeedSequence([seed, task])``, so a sweep gives identical numbers whether its
tasks run serially or in a process pool.
"""

import numpy as np


def task_rng(seed: int, task: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(task)])))
