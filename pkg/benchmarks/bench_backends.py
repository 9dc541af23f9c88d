"""Time the numba kernels against the pure-numpy fallback.

Both backends are called directly from ``obcseq.kernels`` so one process can
compare them regardless of ``OBCSEQ_DISABLE_NUMBA``. Workloads mirror what the
sequential sampler does thousands of times per repetition: a default-length
Gibbs chain on a 10-40 point training set, and OBC scoring of a test set.

    python benchmarks/bench_backends.py [--repeat N]
"""
import argparse
import time

import numpy as np

from obcseq import kernels
from obcseq._accel import HAVE_NUMBA
from obcseq.distributions import RngStream
from obcseq.gibbs import GibbsConfig, run_gibbs
from obcseq.model import Hyperparameters, draw_true_params, generate_labeled_set


def _timeit(fn, repeat):
    fn()  # warm up (numba compiles on first call)
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - start) / repeat


def gibbs_case(n, hyper, cfg):
    truth = draw_true_params(hyper, RngStream(1).child("truth"))
    data = generate_labeled_set(truth, hyper.c, n, RngStream(1).child("data", n))
    genes, offsets = data.crt_layout
    args = (data.class_sums, data.class_sizes, genes, offsets, data.occupied_cells,
            hyper.a0, hyper.b0, hyper.e0, hyper.f0, cfg.iterations, cfg.burn_in, cfg.thin)

    def call(chain):
        return lambda: chain(RngStream(2).generator, *args)

    return call


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    if not HAVE_NUMBA:
        print("numba unavailable or disabled; only the numpy backend can be timed")
    hyper = Hyperparameters(0.3, 15.0, 15.0, 1.0, 1.0, 5)
    cfg = GibbsConfig()

    print(f"{'workload':<28}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    rows = []
    for n in (10, 40):
        case = gibbs_case(n, hyper, cfg)
        rows.append((f"gibbs chain n={n}", case(kernels.gibbs_chain_numpy),
                     case(kernels.gibbs_chain_numba) if HAVE_NUMBA else None))

    post = run_gibbs(generate_labeled_set(draw_true_params(hyper, RngStream(3)), 0.3, 20, RngStream(4)),
                     hyper, cfg, RngStream(5))
    test = generate_labeled_set(draw_true_params(hyper, RngStream(3)), 0.3, 2000, RngStream(6))
    x, _ = test.stacked()
    x = x.astype(float)
    rows.append(("log scores 2000 x 50 draws",
                 lambda: kernels.log_scores_numpy(x, post.r, post.p0, post.p1),
                 (lambda: kernels.log_scores_numba(x, post.r, post.p0, post.p1)) if HAVE_NUMBA else None))

    for name, slow, fast in rows:
        t_np = _timeit(slow, args.repeat) * 1e3
        if fast is None:
            print(f"{name:<28}{t_np:>12.3f}{'-':>12}{'-':>10}")
            continue
        t_nb = _timeit(fast, args.repeat) * 1e3
        print(f"{name:<28}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
