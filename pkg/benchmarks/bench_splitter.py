"""Compare the compiled split kernel with the numpy fallback.

    python benchmarks/bench_splitter.py [--n 8400] [--d 36] [--depth 8] [--repeat 5]

Grows the same tree with both kernels, checks the trees are identical and
prints the median wall time per tree.
"""

import argparse
import statistics
import time

import numpy as np

from callpair.models import _splitter_py
from callpair.models.tree import Presorted, grow_tree

try:
    from callpair.models import _splitter
except ImportError:  # extension not built
    _splitter = None


def time_tree(data, t, splitter, depth, leaf, repeat):
    times = []
    tree = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        tree = grow_tree(data, t, max_depth=depth, min_samples_leaf=leaf, splitter=splitter)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), tree


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=8400)
    ap.add_argument("--d", type=int, default=36)
    ap.add_argument("--depth", type=int, default=8)
    ap.add_argument("--leaf", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    X = rng.normal(size=(args.n, args.d))
    # a few integer-valued columns, like call counts
    X[:, : args.d // 3] = rng.poisson(1.5, size=(args.n, args.d // 3))
    logit = X[:, 0] - 0.5 * X[:, 1] + 0.3 * X[:, -1] - 3.0
    t = (rng.random(args.n) < 1 / (1 + np.exp(-logit))).astype(np.float64)
    data = Presorted.build(X)

    print(f"n={args.n} d={args.d} depth={args.depth} min_leaf={args.leaf} repeat={args.repeat}")
    py_time, py_tree = time_tree(data, t, _splitter_py.level_best_splits, args.depth, args.leaf, args.repeat)
    print(f"python  {1000 * py_time:9.2f} ms/tree  ({py_tree.n_nodes} nodes)")
    if _splitter is None:
        print("cython  not built")
        return
    cy_time, cy_tree = time_tree(data, t, _splitter.level_best_splits, args.depth, args.leaf, args.repeat)
    same = all(
        np.array_equal(getattr(py_tree, f), getattr(cy_tree, f))
        for f in ("feature", "threshold", "left", "right", "value")
    )
    print(f"cython  {1000 * cy_time:9.2f} ms/tree  ({cy_tree.n_nodes} nodes)")
    print(f"speedup {py_time / cy_time:9.2f}x   identical trees: {same}")


if __name__ == "__main__":
    main()
