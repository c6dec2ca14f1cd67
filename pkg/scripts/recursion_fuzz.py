"""Random stress test of the recursion lemma.

Draws sequences that satisfy the hypotheses (rejection-sampled), checks the
conclusion, and reports how tight the bound A_k + V_k >= c k^n gets.

    python scripts/recursion_fuzz.py --instances 5000 --seed 1
"""

import argparse

import numpy as np

from tracephase.estimates import (RecursionParams, epsilon_bound, k_threshold, recursion_check,
                                  sample_admissible_sequences)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tight", action="store_true", help="add only the minimal growth each step")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    slack = (1.0, 1.0) if args.tight else (1.0, 1.5)
    done = rejected = violations = 0
    margins = []
    while done < args.instances:
        n = int(rng.choice([2, 3]))
        C = float(rng.uniform(1.0, 4.0))
        eps = epsilon_bound(C, n) * float(rng.uniform(0.01, 1.0)) * (1 - 1e-9)
        length = k_threshold(C, n) + int(rng.integers(1, 60))
        A, V = sample_admissible_sequences(rng, n, C, eps, length, slack)
        v = recursion_check(RecursionParams(C, eps, n, tuple(A), tuple(V)))
        if not v.hypotheses_hold:
            rejected += 1
            continue
        done += 1
        violations += v.conclusion_holds is not True
        k = np.arange(v.k_threshold, length + 1)
        margins.append(float(np.min((A[k - 1] + V[k - 1]) / (v.c * k ** n))))
    m = np.array(margins)
    print(f"instances={done} rejected={rejected} violations={violations}")
    print(f"min (A_k+V_k)/(c k^n) over k >= threshold: min={m.min():.3e} "
          f"median={np.median(m):.3e}")


if __name__ == "__main__":
    main()
