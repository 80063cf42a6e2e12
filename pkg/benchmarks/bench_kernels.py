"""Compare the compiled and numpy kernels on the two hot loops.

    python benchmarks/bench_kernels.py [--energies 20000] [--level 20]
"""
import argparse
import time

import numpy as np

from aperiodic_spectrum import _backend
from aperiodic_spectrum.models import ClosedFormModel
from aperiodic_spectrum.spectrum import approximant_word
from aperiodic_spectrum.tracemap import initial_conditions_array
from aperiodic_spectrum.transfer import letter_matrices


def best_of(func, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--energies", type=int, default=20000)
    p.add_argument("--level", type=int, default=20)
    p.add_argument("--word-level", type=int, default=12)
    args = p.parse_args(argv)

    model = ClosedFormModel.step(1.0).to_model()
    E = np.linspace(0.0, 20.0, args.energies)
    x1, x0, xm1 = initial_conditions_array(model, E)
    word = approximant_word(model, args.word_level)
    mats, _ = letter_matrices(model, E[:2000])

    backends = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])
    rows = []
    for b in backends:
        t_trace, r_trace = best_of(lambda: _backend.trace_final(x1, x0, xm1, args.level, backend=b))
        t_word, r_word = best_of(lambda: _backend.word_product(mats, word.codes, backend=b))
        rows.append((b, t_trace, t_word, r_trace, r_word))

    print(f"trace_final: {args.energies} energies to level {args.level}; "
          f"word_product: 2000 energies x {len(word)} letters")
    print(f"{'backend':<8} {'trace_final [s]':>16} {'word_product [s]':>17}")
    for b, t1, t2, _, _ in rows:
        print(f"{b:<8} {t1:>16.4f} {t2:>17.4f}")
    if len(rows) == 2:
        (_, p1, p2, rp, wp), (_, c1, c2, rc, wc) = rows
        print(f"speed-up  {p1 / c1:>15.1f}x {p2 / c2:>16.1f}x")
        agree = np.allclose(rp[1], rc[1], rtol=1e-12, atol=1e-12) and np.array_equal(rp[2], rc[2])
        agree &= np.allclose(wp[0] * np.exp(wp[1])[:, None, None], wc[0] * np.exp(wc[1])[:, None, None],
                             rtol=1e-10, atol=1e-10)
        print(f"outputs agree: {agree}")


if __name__ == "__main__":
    main()
