import numpy as np

from heralded_decay import DetectionScheme, Params, analytic
from heralded_decay.trajectory import SimConfig, classify_and_estimate

# Exact probabilities of the click sequences versus a Monte Carlo census.
p = Params(pi_e=0.5, mu=0.5)
est = classify_and_estimate(SimConfig(p, DetectionScheme.adaptive(), n_traj=40_000))
print("seq   exact       Monte Carlo")
for seq in analytic.SEQUENCES:
    f = est.frequency(seq)
    print(f"{seq:4s}  {analytic.p_sequence(seq, p):.6f}    {f:.6f} +- {est.stderr(seq):.6f}")

# The closed forms printed in the literature for P_A and P_BA do not
# reproduce the integrals; the report puts numbers on it.
rep = analytic.appendix_report(p)
print("P_A  quadrature", rep.p_a_quadrature, "re-derived", rep.p_a_rederived, "printed", rep.p_a_printed)
print("P_BA 2D integral", rep.p_ba_dblquad, "re-derived", rep.p_ba_rederived, "printed", rep.p_ba_printed)

# Success probability P_N grows and the exclusion bound Q_M shrinks with more B clicks.
for mu in (0.2, 0.5, 0.8):
    print(f"mu={mu}")
    for pe in np.linspace(0.1, 0.9, 5):
        t = analytic.accumulate(Params(float(pe), mu))
        print(f"  pi_e={pe:.1f}  P_N={np.round(t.p_n, 4)}  Q_M={np.round(t.q_m, 4)}")
