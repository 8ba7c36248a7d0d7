"""Benchmark the CRF kernels: numba-compiled loops vs. the numpy fallback.

Run as a script. Each kernel is timed on random instances of increasing
length, and outputs from the two backends are compared for agreement.
Set DSAE_NUMBA=0 to confirm the package degrades gracefully without numba.
"""

from __future__ import annotations

import time

import numpy as np

from dsae.numeric import kernels
from dsae.numeric.rng import Rng


def _time(fn, *args, repeats: int = 20) -> float:
    fn(*args)  # warm-up (triggers JIT compilation for the numba backend)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def _sparse_doc(rng: Rng, length: int, n_features: int, nnz_per_token: int):
    indptr = np.arange(length + 1, dtype=np.int64) * nnz_per_token
    indices = np.asarray((rng.uniform((length * nnz_per_token,)) * n_features),
                         dtype=np.int64)
    values = rng.normal((length * nnz_per_token,))
    return indptr, indices, values


def main() -> None:
    rng = Rng(0, stream=71)
    K = 7
    numba_available = kernels.USE_NUMBA
    # the module attributes hold the njit-compiled kernels when numba is on
    fast = ({name: getattr(kernels, name) for name in kernels.NUMPY_BACKEND}
            if numba_available else None)
    slow = kernels.NUMPY_BACKEND
    print(f"numba backend: {'enabled' if numba_available else 'UNAVAILABLE (numpy only)'}")
    header = f"{'kernel':<14}{'L':>6}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))

    for L in (16, 64, 256, 1024):
        unary = rng.normal((L, K))
        trans = rng.normal((K, K))
        indptr, indices, values = _sparse_doc(rng, L, 5000, 12)
        W = rng.normal((K, 5000))
        coeff = rng.normal((L, K))
        gradW = np.zeros_like(W)

        for name in ("crf_forward", "crf_backward", "viterbi_kernel",
                     "unary_scores", "unary_grad"):
            if name == "unary_grad":
                args_np = (gradW.copy(), indptr, indices, values, coeff)
                args_nb = (gradW.copy(), indptr, indices, values, coeff)
            elif name == "unary_scores":
                args_np = args_nb = (W, indptr, indices, values)
            else:
                args_np = args_nb = (unary, trans)
            t_np = _time(slow[name], *args_np)
            if numba_available:
                t_nb = _time(fast[name], *args_nb)
                # agreement check between the two implementations
                out_np = slow[name](*args_np)
                out_nb = fast[name](*args_nb)
                if name == "unary_grad":
                    assert np.allclose(args_np[0], args_nb[0], atol=1e-10)
                else:
                    flat_np = np.concatenate([np.ravel(np.asarray(o, dtype=np.float64))
                                              for o in (out_np if isinstance(out_np, tuple) else (out_np,))])
                    flat_nb = np.concatenate([np.ravel(np.asarray(o, dtype=np.float64))
                                              for o in (out_nb if isinstance(out_nb, tuple) else (out_nb,))])
                    assert np.allclose(flat_np, flat_nb, atol=1e-9), name
                print(f"{name:<14}{L:>6}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}"
                      f"{t_np / t_nb:>9.2f}x")
            else:
                print(f"{name:<14}{L:>6}{t_np * 1e3:>12.3f}{'-':>12}{'-':>9}")
    if numba_available:
        print("\nall backend outputs agree within 1e-9")


if __name__ == "__main__":
    main()
