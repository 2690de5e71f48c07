"""Compare the compiled and NumPy kernel backends.

    python benchmarks/bench_kernels.py [--spins 23] [--points 1000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from spinscope._kernels import available_backends


def inputs(spins, points, seed=0):
    rng = np.random.default_rng(seed)
    w0 = 2 * np.pi * rng.uniform(4.5e5, 5.5e5, spins)
    w1 = 2 * np.pi * rng.uniform(4.5e5, 5.5e5, spins)
    dot = rng.uniform(0.9, 1.0, spins)
    k = rng.uniform(0.0, 0.05, spins)
    eta = rng.uniform(-0.1, 0.1, spins)
    tau = np.linspace(0.05e-6, 4e-6, points)
    return w0, w1, dot, k, eta, tau


def cases(mod, w0, w1, dot, k, eta, tau):
    t_free = np.linspace(0, 500e-6, tau.size)
    tau1 = np.full_like(tau, 1e-6)
    return {
        "ramsey": lambda: mod.ramsey_product(w0, w1, dot, tau),
        "echo": lambda: mod.echo_product(w0, w1, k, tau),
        "dd_n16": lambda: mod.dd_terms(w0, w1, dot, k, tau, 16, False),
        "five_pulse": lambda: mod.five_pulse(w0, w1, k * k, eta, tau1, tau1, t_free),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spins", type=int, default=23)
    ap.add_argument("--points", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    data = inputs(args.spins, args.points)
    backends = available_backends()
    timings = {}
    for name, mod in backends.items():
        for case, fn in cases(mod, *data).items():
            number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            timings[(name, case)] = best
    print(f"{args.spins} spins x {args.points} points; best of {args.repeat}")
    print(f"{'kernel':12s}" + "".join(f"{b:>14s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for case in cases(backends["python"], *data):
        row = [timings[(b, case)] for b in backends]
        line = f"{case:12s}" + "".join(f"{t * 1e3:11.3f} ms" for t in row)
        if "cython" in backends:
            line += f"{timings[('python', case)] / timings[('cython', case)]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
