"""Seeded random source used for every stochastic draw in the package.

Uniforms come from the Philox-4x64 counter-based generator (numpy's
``Philox`` bit generator, 53-bit doubles). Gaussians are built from those
uniforms with the paired Box-Muller transform, no rejection step:

    z0 = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
    z1 = sqrt(-2 ln(1 - u1)) * sin(2 pi u2)

for consecutive uniform pairs (u1, u2). ``1 - u1`` lies in (0, 1], so the log is
finite. An odd request drops the trailing ``z1``. Re-implementing these two
rules on top of Philox reproduces every draw bit for bit.
"""

from __future__ import annotations

import numpy as np


class RandomSource:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def uniform(self, size) -> np.ndarray:
        """Doubles on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size) -> np.ndarray:
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        n_pairs = (n + 1) // 2
        u = self._gen.random(2 * n_pairs).reshape(n_pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.empty((n_pairs, 2))
        z[:, 0] = r * np.cos(theta)
        z[:, 1] = r * np.sin(theta)
        return z.reshape(-1)[:n].reshape(shape)
