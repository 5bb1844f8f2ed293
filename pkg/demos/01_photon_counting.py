import numpy as np

from heralded_decay import DetectionScheme, Params, analytic
from heralded_decay.trajectory import SimConfig, conditioned_trajectory, run_ensemble

# An emitter prepared in sqrt(0.5)|g> + sqrt(0.5)|e>, watched by a photon counter.
# Gamma = 1, so times are in units of the lifetime.
p = Params(pi_e=0.5, mu=0.5)
counting = DetectionScheme.counting()

# While no photon arrives the excited population drifts down smoothly,
# because silence is itself evidence for the ground state.
grid = np.linspace(0, 5, 11)
quiet = conditioned_trajectory(p, counting, grid)
print("no click  :", np.round(quiet.populations, 4))
print("formula   :", np.round(analytic.counting_conditional_population(grid, p), 4))

# A click is a quantum jump straight to |g>.
clicked = conditioned_trajectory(p, counting, grid, clicks=[(1.2, "A")])
print("click@1.2 :", np.round(clicked.populations, 4))

# Averaging many such trajectories recovers plain exponential decay.
cfg = SimConfig(p, counting, t_max=5.0, n_traj=20_000, record_points=11)
ens = run_ensemble(cfg)
for t, m, se in zip(ens.times, ens.mean_population, ens.standard_error):
    print(f"t={t:.1f}  mean={m:.4f} +- {se:.4f}   0.5 exp(-t)={0.5 * np.exp(-t):.4f}")
