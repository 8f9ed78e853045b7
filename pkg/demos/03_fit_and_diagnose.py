"""The three-step workflow: copula fit on ranks, margin fit, joint fit."""

from vtarma import (
    ArmaSpec,
    Margin,
    VtArmaModel,
    diagnose,
    fit_copula,
    fit_joint,
    fit_margin_iid,
    lr_stochastic_volatility,
    pseudo_obs,
    simulate,
    two_param,
)
from vtarma.model import residuals

truth = VtArmaModel(two_param(0.48, 0.81), ArmaSpec((0.953,), (-0.847,)), Margin("laplace", mu=0.3, sigma=3.2))
true_params = {"alpha1": 0.953, "beta1": -0.847, "delta": 0.48, "kappa": 0.81, "mu": 0.3, "sigma": 3.2}
x = simulate(truth, 1500, seed=3).x

# Step 1: semi-parametric fit of the copula to rank-based PIT values.
cop = fit_copula(pseudo_obs(x), "two_param", (1, 1))
print("copula fit\n" + cop.summary())
lr = lr_stochastic_volatility(cop)
print(f"LR statistic {lr.statistic:.1f} on {lr.df} df, chi2 p-value {lr.pvalue:.2e}")

# Step 2: the margin under an iid assumption.
mar = fit_margin_iid(x, "laplace")
print("\nmargin fit\n" + mar.summary())

# Step 3: everything jointly, started from steps 1 and 2.
joint = fit_joint(x, "two_param", (1, 1), "laplace", copula_fit=cop, margin_fit=mar)
print("\njoint fit\n" + joint.summary())
print(f"AIC copula {cop.aic:.1f}, joint {joint.aic:.1f}")
print("\nparameter   truth  estimate")
for name, value in joint.params.items():
    print(f"{name:9s} {true_params[name]:7.3f}  {value:8.4f}")
if joint.convergence["se_unstable"]:
    # the fulcrum sits on a cusp of the likelihood, so its Hessian SE is not reliable
    print("curvature unstable for:", ", ".join(joint.convergence["se_unstable"]))

# Residuals should look like iid normals.  Under a white-noise driver they
# are the normal scores of V, which inherit the ARMA dependence.
print()
for name, t in diagnose(joint)["tests"].items():
    print(f"{name:24s} stat {t['statistic']:8.2f}  p {t['pvalue']:.3f}")
wrong = VtArmaModel(joint.model.vt, ArmaSpec(), joint.model.margin)
p = diagnose(residuals(wrong, x, scale="data"))["tests"]["ljung_box_resid_20"]["pvalue"]
print(f"white-noise driver: Ljung-Box on residuals p = {p:.2e}")
