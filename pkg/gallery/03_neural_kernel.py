"""The numpy-only neural kernel: three heads, Adam, gradient checking.

Run:  python gallery/03_neural_kernel.py
"""

import numpy as np

from skillplan.nn import Mlp, NormStats, grad_check, sample_gaussian, train

rng = np.random.default_rng(0)

# Regression head with squared error: fit y = 2x + 1 essentially exactly.
X = rng.uniform(-1, 1, size=(256, 1))
net = Mlp((1, 32, 32, 1), head="linear")
curve = train(net, X, 2 * X + 1, "mse", epochs=3000, lr=1e-3, seed=0)
print(f"linear fit: mse {curve[0]:.3f} -> {curve[-1]:.2e}")

# Gaussian head: mean and a strictly positive diagonal covariance.
Xg = rng.normal(size=(300, 2))
Yg = np.stack([Xg[:, 0] * 0.5, np.full(300, -1.0)], axis=1)
Yg += rng.normal(scale=[0.05, 0.3], size=Yg.shape)
gnet = Mlp((2, 32, 32, 4), head="gaussian")
train(gnet, Xg, Yg, "gaussian_nll", epochs=4000, lr=1e-3, seed=0)
mean, var = gnet.gaussian_params(np.array([1.0, 0.0]))
print(f"gaussian head at x=(1,0): mean {np.round(mean, 2)}, var {np.round(var, 3)}")
print("(dim 0 is nearly deterministic, dim 1 keeps its noise)")

# Rejection sampling draws from the head's distribution.
draws = np.array([sample_gaussian(mean, var, rng) for _ in range(2000)])
print("empirical std of 2000 draws:", np.round(draws.std(axis=0), 3))

# Logistic head with cross entropy separates two blobs.
Xc = np.concatenate([rng.normal(-1.5, 0.4, (150, 2)), rng.normal(1.5, 0.4, (150, 2))])
yc = np.concatenate([np.zeros(150), np.ones(150)])
cnet = Mlp((2, 32, 32, 1), head="logistic")
train(cnet, Xc, yc, "bce", epochs=1500, lr=1e-3, seed=0)
acc = np.mean((cnet.predict(Xc)[:, 0] > 0.5) == (yc > 0.5))
print(f"classifier accuracy: {acc:.3f}")

# Every head's analytic gradients match central finite differences.
for sizes, head, loss, Y in (
    ((3, 8, 8, 2), "linear", "mse", rng.normal(size=(4, 2))),
    ((3, 8, 8, 4), "gaussian", "gaussian_nll", rng.normal(size=(4, 2))),
    ((3, 8, 8, 1), "logistic", "bce", rng.integers(0, 2, 4).astype(float)),
):
    n = Mlp(sizes, head)
    n.init_params(1)
    err = grad_check(n, loss, rng.normal(size=(4, 3)), Y)
    print(f"grad check {head}/{loss}: max relative error {err:.2e}")

# Normalization stats round-trip exactly and guard degenerate dimensions.
stats = NormStats.fit(np.column_stack([rng.normal(5, 3, 100), np.full(100, 7.0)]))
x = np.array([2.0, 7.0])
print("normalize/denormalize round trip:", stats.denormalize(stats.normalize(x)))
