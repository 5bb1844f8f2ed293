import numpy as np

from heralded_decay import Params, analytic

# Which beam-splitter transmissivity maximizes the heralding probability?
for pe in (0.2, 0.5, 0.9):
    row = [analytic.p_a(Params(pe, mu)) for mu in (0.2, 0.5, 0.8)]
    print(f"pi_e={pe}: P_A at mu = 0.2, 0.5, 0.8 ->", np.round(row, 4))

# Weakly excited emitters prefer a large transmissivity, strongly excited ones a small one.
print(" pi_e   mu*     P_A(mu*)  grid mu*")
for pe in np.linspace(0.05, 0.95, 10):
    opt = analytic.optimize_mu(float(pe))
    print(f"{pe:5.2f}  {opt.mu_star:.4f}  {opt.p_a_star:.5f}   {opt.mu_grid:.4f}")
