import timeit

import numpy as np
import matplotlib.pyplot as plt

from src.cycles import cluster_time_differences, cluster_time_differences_slow


def make_deltas(n, rng, cycles=(20000, 40000, 80000), jitter=20):
    """ time differences of a message with a few cycles and bounded jitter """
    base = rng.choice(cycles, size=n)
    return base + rng.integers(-jitter, jitter + 1, size=n)


def check_agreement(n_trials=200, tol=40):

    rng = np.random.default_rng(2020)

    for _ in range(n_trials):
        deltas = make_deltas(int(rng.integers(1, 500)), rng)
        fast = [list(c) for c in cluster_time_differences(deltas, tol)]
        slow = cluster_time_differences_slow(deltas, tol)
        assert fast == slow, (fast, slow)

    print(f"numpy and loop clustering agree on {n_trials} random inputs")


def time_clustering(sizes=(10, 100, 1000, 10000, 100000), tol=40):

    rng = np.random.default_rng(0)
    fast_t, slow_t = [], []

    for n in sizes:
        deltas = make_deltas(n, rng)
        fast_t.append(min(timeit.repeat(lambda: cluster_time_differences(deltas, tol), number=5, repeat=3)) / 5)
        slow_t.append(min(timeit.repeat(lambda: cluster_time_differences_slow(deltas, tol), number=5, repeat=3)) / 5)
        print(f"n={n:>6}  numpy {fast_t[-1] * 1e3:8.3f} ms  loop {slow_t[-1] * 1e3:8.3f} ms")

    plt.loglog(sizes, fast_t, marker="o", label="numpy")
    plt.loglog(sizes, slow_t, marker="o", label="loop")
    plt.xlabel("number of time differences")
    plt.ylabel("seconds")
    plt.legend()
    plt.savefig("clustering_timings.png")


if __name__ == "__main__":
    check_agreement()
    time_clustering()
