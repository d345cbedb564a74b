"""Compare the compiled kernel backend against the pure-numpy fallback.

Times the three workloads that dominate real runs: threshold root-finding
(reciprocal-moment sums inside two nested bisections), step-function
threshold evaluation (the black-box optimizer's inner loop), and bulk-density
evaluation (the subordination fixed point per grid point).

Usage: python benchmarks/bench_backends.py
"""

import time

import numpy as np

import nlspectra as nl
from nlspectra import backend

M_DELTA = nl.ModelSpec(eta=nl.POINT_MASS_1, p=0.05, beta=1.0)
M_HALF = nl.ModelSpec(eta=nl.HALF_NORMAL, p=0.05, beta=1.0)

STEP16 = nl.Step(
    knots=tuple(np.linspace(-3.5, 3.5, 16)),
    values=tuple(np.concatenate(([0.0], np.cumsum(np.full(16, 3.4 / 16))))),
)

WORKLOADS = [
    ("beta_star tanh / point mass", lambda: nl.beta_star(nl.Tanh(1.71, 0.584), M_DELTA), 5),
    ("beta_star tanh / half normal", lambda: nl.beta_star(nl.Tanh(2.13, 0.57), M_HALF), 1),
    ("beta_star step16 / point mass", lambda: nl.beta_star(STEP16, M_DELTA), 20),
    (
        "density 400 pts, tanh",
        lambda: nl.free_conv_density(nl.Tanh(1.71, 0.584), np.linspace(-3.2, 3.2, 400)),
        1,
    ),
]


def run(name: str, fn, repeats: int) -> float:
    fn()  # warm caches
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def main() -> None:
    names = backend.available_backends()
    print(f"backends: {', '.join(names)}")
    results: dict[str, dict[str, float]] = {}
    for name in names:
        backend.set_backend(name)
        results[name] = {}
        for label, fn, repeats in WORKLOADS:
            results[name][label] = run(label, fn, repeats)
    width = max(len(label) for label, _, _ in WORKLOADS)
    header = f"{'workload':<{width}}  " + "  ".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += "  speedup"
    print(header)
    for label, _, _ in WORKLOADS:
        row = f"{label:<{width}}  " + "  ".join(f"{results[n][label] * 1e3:>10.2f}ms" for n in names)
        if len(names) == 2:
            row += f"  {results['python'][label] / results['compiled'][label]:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
