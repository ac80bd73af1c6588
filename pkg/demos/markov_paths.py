"""Classical Markov process with the monotone transition kernels.

Paths are sampled through the kernels delta_x |> mu_t.  The Monte-Carlo
estimate of E[X_s X_t] is compared with the value computed in the
two-factor matrix model of the increments.
"""
import numpy as np

from monolev import markov as mk
from monolev import semigroup as sg
from monolev import verify as vf

rng = np.random.default_rng(0)
X = mk.sample_path(sg.drift_pair(0.7), [0.5, 1.0, 2.0], 3, rng)
print("drift paths (expect -0.7 t):\n", X)

r = vf.classical_version(n=100_000, s=0.5, t=1.0, rng=rng,
                         funcs=(("x", "x"), ("x^2", "x^2")))
for k, v in r.items():
    print(f"Phi({k.replace(',', ' at s, ')} at t): mc {v['mc']:.5f} +- {v['se']:.5f}, "
          f"oracle {v['oracle']:.5f}, {v['sigmas']:.2f} SE")
