"""Weights over space and time with a product basis.

Points carry a location (lon, lat) and a year. Two base models are
available. One is a linear model in the features, which is right early
on. The other is kNN on location, which becomes right later as a
spatial effect builds up over time. Spatial and temporal bumps are
placed separately by k-means and then multiplied. Each block has its
own bandwidth.
"""

import numpy as np

from cdst.base_models import BaseModelSpec
from cdst.basis import BasisSpec
from cdst.dataset import Dataset
from cdst.em import fit_cdst

rng = np.random.default_rng(11)
n = 500
loc = rng.uniform(0, 1, (n, 2))
year = rng.integers(2000, 2011, n).astype(float)
feat = rng.normal(size=(n, 2))
share = (year - 2000) / 10
field = np.sin(2 * np.pi * loc[:, 0]) * np.cos(np.pi * loc[:, 1])
y = (1 - share) * (feat @ [1.0, -0.5]) + share * 2 * field + 0.2 * rng.normal(size=n)

x = np.column_stack([feat, loc])
xt = np.column_stack([loc, year])
data = Dataset(x, xt, y, ("f1", "f2", "lon", "lat"), ("lon", "lat", "year"))

specs = [BaseModelSpec("ols", (0, 1), name="linear"), BaseModelSpec("knn", (2, 3), k=8, name="knn_space")]
basis = BasisSpec("product", M=12, bandwidths=(0.4, 3.0), blocks=((0, 1), (2,)), block_counts=(4, 3))
model = fit_cdst(data, specs, basis, folds=10)
print(f"EM: converged={model.converged} after {model.n_iter} iterations, M={model.M}")

# average weight over a spatial grid, one line per year
g = np.linspace(0.05, 0.95, 10)
grid = np.array([(a, b) for a in g for b in g])
print("\nyear   w_linear  w_knn_space")
for yr in range(2000, 2011, 2):
    w = model.weights_at(np.column_stack([grid, np.full(len(grid), yr)])).mean(axis=0)
    print(f"{yr}   {w[0]:8.3f}  {w[1]:10.3f}")
