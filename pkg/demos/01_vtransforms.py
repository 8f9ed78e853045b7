"""V-transforms: shapes, stochastic inversion and uniformity."""

import numpy as np
from scipy import stats

from vtarma import linear, three_param, two_param

# A v-transform folds the unit interval at a fulcrum delta: small and large
# PIT values both map to large v, values near delta map to v near 0.
transforms = {
    "linear(0.5)": linear(0.5),
    "two_param(0.46, 0.9)": two_param(0.46, 0.9),
    "three_param(0.55, 1.4, 0.65)": three_param(0.55, 1.4, 0.65),
}
grid = np.array([0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0])
print("u      " + "  ".join(f"{g:6.2f}" for g in grid))
for name, vt in transforms.items():
    print(f"{name:28s}", "  ".join(f"{v:6.3f}" for v in vt.evaluate(grid)))

# Every point u has a dual point on the other side of the fulcrum with the
# same v; the two preimages of v are inverse_left(v) and inverse_left(v) + v.
vt = transforms["three_param(0.55, 1.4, 0.65)"]
v = 0.3
left = vt.inverse_left(v)
right = left + v
print(f"\npreimages of v={v}: {left:.6f} and {right:.6f}; V there = {vt.evaluate(left):.6f}, {vt.evaluate(right):.6f}")
print(f"probability of the left preimage, Delta(v) = {vt.down_probability(v):.6f}")

# V(U) is uniform when U is, and the randomised inverse maps uniforms back.
rng = np.random.default_rng(0)
u = rng.uniform(size=200_000)
print(f"\nKS p-value of V(U): {stats.kstest(vt.evaluate(u), 'uniform').pvalue:.3f}")
back = vt.stochastic_invert(vt.evaluate(u), rng.uniform(size=u.size))
print(f"KS p-value of the stochastic inverse: {stats.kstest(back, 'uniform').pvalue:.3f}")
print(f"mean Delta(V) = {np.mean(vt.down_probability(vt.evaluate(u))):.4f} (delta = {vt.delta})")

# Curves for plotting, one column per transform.
g = np.linspace(0, 1, 201)
rows = np.column_stack([g] + [t.evaluate(g) for t in transforms.values()])
np.savetxt("vtransform_curves.csv", rows, delimiter=",", header="u,linear,two_param,three_param", comments="")
print("\nwrote vtransform_curves.csv")
