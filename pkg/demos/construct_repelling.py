"""Build a bounded-step backward orbit landing on a repelling boundary fixed point.

The Blaschke product z(z+a)/(1+az) attracts everything to 0, yet 1 is a
repelling boundary fixed point; the construction finds a backward orbit
converging to it with steps near 1/2 log beta.
"""

import argparse

import numpy as np

from kobdyn import backward as bw
from kobdyn import holomap as hm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=0.5)
    args = ap.parse_args()

    f = hm.DiskBlaschkeQuad(args.a)
    orbit = bw.construct_backward_orbit_at(f, [1.0])
    beta = orbit.meta["beta"]
    print("beta_sigma = %.10f   n0 = %d   points = %d" % (beta, orbit.meta["n0"], orbit.n + 1))
    print("step_sup = %.6f   (1/2 log beta = %.6f)" % (orbit.step_sup, 0.5 * np.log(beta)))
    print("|z_n - 1| = %.3e   max residual = %.1e" % (abs(complex(orbit.points[-1][0]) - 1), orbit.residuals.max()))
    print(bw.step_limit_check(f, [1.0]).summary())


if __name__ == "__main__":
    main()
