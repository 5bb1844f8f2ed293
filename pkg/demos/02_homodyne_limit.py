import numpy as np

from heralded_decay import DetectionScheme, Params
from heralded_decay.trajectory import SimConfig, mean_population_step, run_ensemble, run_trajectory

# Mixing the emission with a strong coherent field on a 50:50 splitter turns
# rare large jumps into many small kicks.
p = Params(pi_e=0.5, mu=0.5)

for alpha in (1.0, 5.0):
    cfg = SimConfig(p, DetectionScheme.fixed_lo(alpha), t_max=5.0, record_points=6)
    rec = run_trajectory(cfg, 0)
    print(f"alpha={alpha}: {len(rec.events)} clicks, population on grid", np.round(rec.populations, 3))

# The typical population change per click falls like 1/alpha.
alphas = np.array([2.0, 4.0, 8.0, 16.0])
steps = [mean_population_step(SimConfig(p, DetectionScheme.fixed_lo(a), t_max=2.0, n_traj=100))
         for a in alphas]
for a, s in zip(alphas, steps):
    print(f"alpha={a:4.0f}  mean |dP_e| per click = {s:.4f}")
print("log-log slope:", np.polyfit(np.log(alphas), np.log(steps), 1)[0])

# Individual trajectories wander, but the ensemble mean still decays exponentially.
cfg = SimConfig(p, DetectionScheme.fixed_lo(1.0), t_max=5.0, n_traj=5000, record_points=6)
ens = run_ensemble(cfg)
print("mean      :", np.round(ens.mean_population, 4))
print("0.5 e^-t  :", np.round(0.5 * np.exp(-ens.times), 4))
