"""With no basis functions the weight field is flat.

Then CDST is ordinary least-squares stacking on the out-of-fold matrix.
This script checks that on a small problem and sets the result beside
the two other constant-weight rules: equal weights and Akaike weights.
"""

import numpy as np

from cdst import base_models
from cdst.base_models import BaseModelSpec
from cdst.baselines import saic, simple_average, vanilla_stack
from cdst.basis import BasisSpec
from cdst.cv import build_oof, make_folds
from cdst.dataset import Dataset
from cdst.em import fit_cdst

rng = np.random.default_rng(7)
n = 40
x = rng.uniform(-2, 2, (n, 2))
y = np.sin(x[:, 0]) + 0.5 * x[:, 1] ** 2 + 0.2 * rng.normal(size=n)
data = Dataset(x, x, y, ("a", "b"), ("a", "b"))

specs = [
    BaseModelSpec("ols", name="linear"),
    BaseModelSpec("poly_ridge", degree=2, alpha=0.1, name="quadratic"),
    BaseModelSpec("knn", k=5, name="knn"),
]
folds = make_folds(n, 5, seed=3)

model = fit_cdst(data, specs, BasisSpec(M=0), folds=folds)
st = vanilla_stack(y, build_oof(specs, data, folds))
print("CDST, M = 0 :", np.round(model.params.mu, 6))
print("stacking    :", np.round(st.w, 6))
print("max abs difference:", np.max(np.abs(model.params.mu - st.w)))

# knn has no likelihood, so it gets no Akaike weight
full = [base_models.fit(s, x, y) for s in specs]
aics = [base_models.aic(m) if s.kind in base_models.LIKELIHOOD_KINDS else None for s, m in zip(specs, full)]
print("\nAIC         :", ", ".join("none" if a is None else f"{a:.2f}" for a in aics))
print("Akaike      :", np.round(saic(aics).w, 4))
print("equal       :", simple_average(len(specs)).w)
