"""One-step VaR forecasts and a rolling backtest with exception counts."""

import sys

import numpy as np

from vtarma import ArmaSpec, Margin, VtArmaModel, simulate, two_param
from vtarma.backtest import refit_joint, rolling_backtest

model = VtArmaModel(two_param(0.48, 0.81), ArmaSpec((0.953,), (-0.847,)), Margin("laplace", mu=0.3, sigma=3.2))
n_test = 1043
x = simulate(model, 1000 + n_test, seed=7).x

# With --refit the model is refitted on every 1000-day window (slow: one
# joint fit per day).  Without it the true model is held fixed, which
# isolates the forecasting step.
refit = refit_joint("two_param", (1, 1), "laplace") if "--refit" in sys.argv else None
rep = rolling_backtest(x, model, window=1000, levels=(0.95, 0.99), refit=refit)

for lv, r in rep.levels.items():
    print(
        f"{lv:.0%} VaR: {r.exceptions} exceptions, expected {r.expected:.1f}, "
        f"99% binomial interval {r.interval}, two-sided p {r.pvalue:.3f}"
    )
if rep.failures:
    print(f"{len(rep.failures)} refits failed; the previous estimate was kept")

cols = [rep.index, rep.realized, rep.mu, rep.levels[0.95].var, rep.levels[0.99].var]
np.savetxt("backtest.csv", np.column_stack(cols), delimiter=",", header="t,x,mu,var_0.95,var_0.99",
           comments="", fmt=["%d", "%.6f", "%.6f", "%.6f", "%.6f"])
print("wrote backtest.csv")
