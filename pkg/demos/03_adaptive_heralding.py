import numpy as np

from heralded_decay import DetectionScheme, Params, adaptive_alpha, apply_jump, from_populations
from heralded_decay.detection import b_jump_population_map
from heralded_decay.trajectory import SimConfig, conditioned_trajectory, run_trajectory

# The adaptive oscillator is tuned at every instant so that the ground-state
# part of the field cancels in detector A. A click there leaves the emitter
# fully excited: the decay is reversed and heralded.
p = Params(pi_e=0.5, mu=0.5)
state = from_populations(0.5)
alpha = adaptive_alpha(state, p)
print("adaptive alpha at t=0:", alpha)
outcome, post = apply_jump(state, "A", alpha, p)
print("after an A click:", abs(post.b) ** 2)

# A B click instead pushes the emitter further towards the ground state.
outcome, post = apply_jump(state, "B", alpha, p)
print("after a B click:", outcome.post_population)
x = np.linspace(0, 0.9, 10)
print("B map  x -> x':", np.round(b_jump_population_map(x, 0.5), 4))

# Conditioned runs: a click in A at t = 1.4, or in B at t = 2.5. The record
# stops at t = 4 with population left, so the silent endings read "?".
grid = np.linspace(0, 4, 9)
scheme = DetectionScheme.adaptive()
for clicks in ([], [(1.4, "A")], [(2.5, "B")]):
    rec = conditioned_trajectory(p, scheme, grid, clicks)
    print(rec.sequence_label.ljust(3), np.round(rec.populations, 4))

# Random trajectories end either heralded (B...BA) or decayed (B...B0).
cfg = SimConfig(p, scheme, t_max=20.0)
print([run_trajectory(cfg, i).sequence_label for i in range(12)])
