"""Monte-Carlo checks of the Campbell and GNZ identities.

Campbell: E sum_{u in X} h(u) = integral h(u) rho(u) du, an exact law for
the Poisson sampler. GNZ: E sum_{u in X} h(u, X-u) = E integral
h(u, X) lambda(u, X) du, which simultaneously exercises the birth-death
sampler and the conditional-intensity evaluation. Each check reports the
two sides and a z-score; |z| < 3 is the pass line used by the CLI.
"""

import math

import numpy as np

from pplasso import (
    ConstantField,
    InteractionSpec,
    ModelSpec,
    Window,
    campbell_check,
    gnz_check,
)

window = Window(0.0, 1.0, 0.0, 1.0)

poisson = ModelSpec([ConstantField()], window, beta=[math.log(100.0)])
print("campbell identity, rho = 100 on the unit square, 500 replicates")
for name, h in [("1", lambda x, y: np.ones_like(x)),
                ("x", lambda x, y: x)]:
    res = campbell_check(poisson, h, replicates=500, seed=0)
    print(f"  h = {name:>2}: lhs {res.lhs:8.4f}  rhs {res.rhs:8.4f}  "
          f"z {res.z:+.2f}  {'ok' if abs(res.z) < 3 else 'FAIL'}")

strauss = ModelSpec([ConstantField()], window, beta=[math.log(100.0)],
                    interaction=InteractionSpec("strauss", 0.05), psi=-0.7)
print("gnz identity, strauss (psi = -0.7, R = 0.05), 200 replicates")
for name, h in [("1", lambda x, y, s: np.ones_like(x)),
                ("s1", lambda x, y, s: s)]:
    res = gnz_check(strauss, h, replicates=200, seed=0,
                    burn_in=50_000, sweeps=5_000)
    print(f"  h = {name:>2}: lhs {res.lhs:8.4f}  rhs {res.rhs:8.4f}  "
          f"z {res.z:+.2f}  {'ok' if abs(res.z) < 3 else 'FAIL'}")
