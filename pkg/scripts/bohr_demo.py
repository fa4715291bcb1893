"""End-to-end correlated point for a random-sign weight on the full 2-shift.

Usage: python scripts/bohr_demo.py [seed] [horizon]
"""
import sys

from semihorse.bohr import Weight, end_to_end_bohr_witness
from semihorse.prune import corpus


def main(seed=7, horizon=10 ** 4):
    lam, pi, N = corpus()["identity"]
    wit = end_to_end_bohr_witness(lam, pi, N, Weight.random_sign(int(seed)), int(horizon))
    rep = wit.report
    print(f"k={wit.k} tau*={wit.tau_star}")
    for n in (10, 100, 1000, int(horizon)):
        if n <= int(horizon):
            print(f"  N={n:6d} corr={rep.correlation[n - 1]:.6f} ref={rep.reference[n - 1]:.6f}")
    print(f"  max |corr - ref| = {rep.max_abs_diff:.2e}")
    print(f"  entropy certificate: {wit.entropy_certificate}")


if __name__ == "__main__":
    main(*sys.argv[1:])
