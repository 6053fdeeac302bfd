# %% [markdown]
# # The closed-form mechanism, step by step

# %%
import numpy as np

from privmech import eit

p1 = np.array([0.05, 0.95])
p2 = np.array([0.95, 0.05])
eps = 0.01

# %% [markdown]
# The perturbation is rank one: a per-letter amplitude alpha times a fixed
# output direction. The amplitudes follow the principal direction p1 - p2.

# %%
d = eit.principal_direction(p1, p2)
print("lambda* =", d.lambda_star, " v* =", d.v_star)
print("activity ratios:", eit.activity_ratios(p1, p2, d))
case = eit.select_active_case(p1, p2, eps, eps, d)
print("active constraints:", case.value)

# %%
eta = eit.solve_eta(p1, p2, eps, eps, d)
alpha = eit.alpha_both_constraints(d, p1, p2, *eta)
print("eta =", eta, " alpha =", alpha)

# %% [markdown]
# `solve` runs the whole pipeline, assembles the channel, shrinks it if an
# exact budget is violated and picks the better of the two signs.

# %%
sol = eit.solve(p1, p2, eps, eps)
print(np.round(sol.mechanism.rows, 6))
print(f"exact utility {sol.exact_utility:.6f} vs surrogate {sol.approx_utility:.6f}")
print(f"exact leakages {sol.exact_leak1:.6f}, {sol.exact_leak2:.6f} (budget {eps})")

# %% [markdown]
# A one-sided budget: only the first source's leakage binds, and the
# amplitudes scale inversely with that source's letter probabilities, so
# rare letters are perturbed most.

# %%
q1, q2 = np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.3, 0.5])
sol = eit.solve(q1, q2, 1e-3, 5e-3)
print(sol.case.tag.value, sol.alpha, sol.alpha * q1)
