"""
A tour of the tensor core
=========================

Eager numpy arrays with a recorded graph behind them: build a value, call
backward on a scalar, read gradients off the leaves. Finishes with the
finite-difference check used throughout the test suite.
"""

import numpy as np

from bistream import tensor as T

# -- forward values are just numpy -------------------------------------------

x = T.tensor(np.array([[1.0, -2.0], [3.0, 0.5]]), requires_grad=True)
w = T.tensor(np.array([[2.0, 0.0], [1.0, -1.0]]), requires_grad=True)

y = T.matmul(T.relu(x), w)
print("relu(x) @ w =")
print(y.data)

# -- reverse mode --------------------------------------------------------------

# backward wants a scalar; reduce first
loss = T.tmean(T.square(y))
grads = T.backward(loss)

print("\nloss =", loss.item())
print("dloss/dx =")
print(grads[x.node_id].data)
print("dloss/dw =")
print(grads[w.node_id].data)

# constants never appear in the gradient map
c = T.constant(np.ones((2, 2)))
loss2 = T.tmean(T.mul(x, c))
grads2 = T.backward(loss2)
print("\nconstant in gradient map:", c.node_id in grads2)

# -- every op kind has a registered gradient -----------------------------------

print("\nprimitive op kinds:", len(T.OP_KINDS))
print(sorted(T.OP_KINDS))

# -- checking a gradient numerically --------------------------------------------

# central differences around x0, compared against the recorded adjoint
x0 = T.tensor(np.linspace(-1, 1, 12).reshape(3, 4))
err = T.finite_difference_check(
    lambda t: T.tmean(T.square(T.relu(t))), x0, eps=1e-6)
print(f"\nfinite-difference max relative error: {err:.3e}")
