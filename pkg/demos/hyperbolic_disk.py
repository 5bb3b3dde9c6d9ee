"""Backward orbit of a hyperbolic disk automorphism, checked end to end.

Run:  python3 demos/hyperbolic_disk.py --a 0.5 --n 40
"""

import argparse

import numpy as np

from kobdyn import backward as bw
from kobdyn import dynamics as dyn
from kobdyn import holomap as hm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=40)
    args = ap.parse_args()

    f = hm.DiskMobius(args.a)
    cls = dyn.classify(f)
    print("kind=%s  tau=%s  beta_tau=%.12f" % (cls.kind, np.round(cls.point, 12), cls.beta))

    orbit = bw.backward_orbit(f, [0.0], args.n, tau=cls.point)
    print("z_%d = %s   flags=%s" % (orbit.n, complex(orbit.points[-1][0]), orbit.flags))
    print("steps: min %.12f max %.12f" % (orbit.steps.min(), orbit.steps.max()))

    print(bw.theorem01_suite(f, orbit, cls=cls).summary())
    print(bw.inequality_battery(f, orbit, cls=cls).summary())


if __name__ == "__main__":
    main()
