"""RMS error of the random-feature kernel estimate against the exact Gaussian kernel as m grows.

Writes ``kernel_error.csv`` (m, rms_error, rms_error * sqrt(m)); the last column
should level off if the error decays like m^-1/2.
"""

import argparse

import numpy as np

from rffrc.artifacts import write_table
from rffrc.features import gaussian_kernel, sample_feature_map, transform


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sigma", type=float, default=2.0)
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--pairs", type=int, default=200)
    ap.add_argument("--out", default="kernel_error.csv")
    args = ap.parse_args()
    g = np.random.default_rng(0)
    x = g.normal(size=(args.pairs, args.dim)) * 2
    y = x + g.normal(size=(args.pairs, args.dim))
    exact = np.array([gaussian_kernel(a, b, args.sigma) for a, b in zip(x, y)])
    rows = []
    for m in (10, 30, 100, 300, 1000, 3000, 10000, 30000):
        fm = sample_feature_map(args.dim, m, args.sigma, seed=m)
        approx = np.einsum("ij,ij->i", transform(fm, x), transform(fm, y))
        rms = float(np.sqrt(np.mean((approx - exact) ** 2)))
        rows.append((m, rms, rms * np.sqrt(m)))
        print(f"m={m:6d}  rms={rms:.4e}  rms*sqrt(m)={rms * np.sqrt(m):.3f}")
    write_table(args.out, ["m", "rms_error", "scaled"], rows)


if __name__ == "__main__":
    main()
