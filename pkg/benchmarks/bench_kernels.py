"""Compare the Cython kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--dataset data/ml-100k/u.data]
"""

import argparse

from ppns.bench import main

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--dataset")
    p.add_argument("--repeat", type=int, default=3)
    a = p.parse_args()
    main(dataset=a.dataset, repeat=a.repeat)
