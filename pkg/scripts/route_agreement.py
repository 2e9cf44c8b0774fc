"""Compare the two mean-width routes over seeded random zoo members."""
import argparse
import math

import numpy as np

from alphawidth import zoo
from alphawidth.alphacore import AlphaFn, AlphaParam
from alphawidth.meanwidth import mean_width_limit, mean_width_repr, width_grids


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for beta in (2.5, 4.0, math.inf):
        primal, dual = width_grids(1, beta)
        rng = np.random.default_rng(args.seed)
        gaps = []
        for _ in range(args.count):
            f = AlphaFn.sample(zoo.random_member(rng, beta), primal, AlphaParam.from_beta(beta))
            rep = mean_width_repr(f, dual).value
            lim = mean_width_limit(f, dual=dual).value
            gaps.append(abs(lim - rep) / max(abs(rep), 1e-300))
        print(f"beta={beta:g}: worst relative gap {max(gaps):.2e}, median {np.median(gaps):.2e}")


if __name__ == "__main__":
    main()
