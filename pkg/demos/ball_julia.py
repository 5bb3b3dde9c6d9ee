"""Julia's lemma and pole independence on the unit ball of C^2."""

import numpy as np

from kobdyn import dynamics as dyn
from kobdyn import holomap as hm

f = hm.BallMobiusAxis(0.5, 2)
cls = dyn.classify(f)
print("Wolff point", np.round(cls.point, 10), "beta", cls.beta)

rep = dyn.julia_check(f, cls.point, cls.point, trials=1000, seed=1)
print(rep.summary())
print("max ratio h(f z)/h(z) = %.10f" % rep.data["max_ratio"])

for p in ([0, 0], [0.5, 0], [0.2j, -0.4]):
    est = dyn.dilation_coefficient(f, [-1, 0], p)
    print("beta at -1 with pole %-12s = %.12f +- %.1e" % (p, est.value, est.error_bar))
