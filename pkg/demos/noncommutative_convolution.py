"""Monotone convolution depends on the order of its arguments.

Bernoulli |> delta_1 and delta_1 |> Bernoulli have the same mean but
different third moments.  The matrix model of two monotone independent
Jacobi matrices confirms both values.
"""
from monolev import convolution as cv
from monolev import matrix_oracle as mo
from monolev import measure as ms

B, D = ms.bernoulli(0.0, 1.0), ms.dirac(1.0)
for name, (mu, nu) in {"B |> d1": (B, D), "d1 |> B": (D, B)}.items():
    lam = cv.mono_convolve(mu, nu)
    oracle = mo.moments_of_sum(mo.model_from_measures([mu, nu], 2), range(4))
    print(name, "atoms", lam.atom_pos.round(6), "masses", lam.atom_mass.round(6))
    print("   moments", [round(ms.moment(lam, k), 8) for k in range(4)],
          "oracle", [round(float(m), 8) for m in oracle])

lam = cv.mono_convolve(ms.bernoulli(), ms.arcsine(1.0))
print("B |> arcsine: atoms", lam.atom_pos.round(4), "density mass", round(lam.density_mass, 4))
