"""Calibrate the desk-scale inversion learning rate.

Sweeps plain-gradient-descent and adam learning rates on self-rendered
targets and reports, per rate, how many of the seeded trials reach 1% of
the initial loss and the median final ratio.  The winning setting is frozen
as the InversionConfig default.

Usage: python3 scripts/calibrate_learning_rate.py [--trials 8] [--iterations 300]
"""

import argparse
import time

import numpy as np

from stylefuse import (DistanceSpec, Generator, GeneratorConfig, StyleVector,
                       init_random_weights, invert)
from stylefuse.inversion import InversionConfig, best_so_far


def trial_ratio(gen, target, optimizer, lr, iterations):
    cfg = InversionConfig(learning_rate=lr, iterations=iterations, optimizer=optimizer)
    try:
        result = invert(target, gen, DistanceSpec("l2"), cfg)
    except Exception as exc:
        return None
    _, best = best_so_far(result.trace)
    return best / result.trace[0][1]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=8)
    parser.add_argument("--iterations", type=int, default=300)
    parser.add_argument("--weight-seed", type=int, default=11)
    args = parser.parse_args()

    config = GeneratorConfig()
    gen = Generator(config, init_random_weights(config, args.weight_seed))
    targets = []
    for seed in range(args.trials):
        rng = np.random.default_rng(1000 + seed)
        s = StyleVector(rng.standard_normal((config.layers, config.width)))
        targets.append(gen.synthesize(s))

    grid = [("gd", lr) for lr in (0.5, 1.0, 2.0, 5.0, 10.0, 20.0)] + \
           [("adam", lr) for lr in (0.01, 0.03, 0.05, 0.1)]
    for optimizer, lr in grid:
        t0 = time.time()
        ratios = [trial_ratio(gen, t, optimizer, lr, args.iterations) for t in targets]
        ok = sum(1 for r in ratios if r is not None and r <= 0.01)
        shown = [f"{r:.2e}" if r is not None else "diverged" for r in ratios]
        print(f"{optimizer:>4} lr={lr:<6} pass {ok}/{len(targets)} "
              f"({time.time() - t0:.1f}s)  ratios: {shown}")


if __name__ == "__main__":
    main()
