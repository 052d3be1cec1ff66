"""Independent reference values frozen into the C++ tests.

Uses numpy/scipy only; none of the C++ code is involved. Re-run with
    python3 tests/oracle/oracle_values.py
"""
import numpy as np
from scipy.optimize import linprog


def kl(p, q):
    p = np.asarray(p, float); q = np.asarray(q, float)
    m = p > 0
    return float(np.sum(p[m] * np.log(p[m] / q[m])))


def maximin(D, i):
    """max_q min_{j != i} sum_k q_k D[i, j, k] by linprog."""
    M, _, K = D.shape
    A, b = [], []
    for j in range(M):
        if j != i:
            A.append(list(-D[i, j, :]) + [1.0]); b.append(0.0)
    res = linprog([0.0] * K + [-1.0], A_ub=A, b_ub=b, A_eq=[[1.0] * K + [0.0]], b_eq=[1.0],
                  bounds=[(0, None)] * K + [(None, None)], method="highs")
    return res.x[:K], -res.fun


print("kl (.5,.5)||(.25,.75) =", repr(kl([.5, .5], [.25, .75])))
print("kl (1,0)||(.5,.5)     =", repr(kl([1, 0], [.5, .5])))
print("kl bern .9||.1        =", repr(kl([.1, .9], [.9, .1])))

# Metropolis weights on the 3-node path.
W = np.array([[2/3, 1/3, 0], [1/3, 1/3, 1/3], [0, 1/3, 2/3]])
print("path3 eig W           =", np.sort(np.linalg.eigvals(W).real))
print("path3 R(W - J/3)      =", repr(max(abs(np.linalg.eigvals(W - np.ones((3, 3)) / 3)))))

# Three-hypothesis Bernoulli sensor with three actions.
p = np.array([[0.1, 0.2, 0.3],
              [0.5, 0.4, 0.6],
              [0.9, 0.7, 0.8]])  # p[i, k] = P(y = 1 | h_i, u_k)
D = np.zeros((3, 3, 3))
for i in range(3):
    for j in range(3):
        for k in range(3):
            D[i, j, k] = kl([1 - p[i, k], p[i, k]], [1 - p[j, k], p[j, k]])
for i in range(3):
    q, v = maximin(D, i)
    print(f"bern3 v[{i}] = {v!r}  q = {np.round(q, 12).tolist()}")

# Fixed 3x3 divergence table for hypothesis 0 (rows j = 1, 2).
T = np.zeros((3, 3, 3))
T[0, 1] = [1.0, 0.2, 0.5]
T[0, 2] = [0.1, 0.9, 0.4]
q, v = maximin(T, 0)
print("table v =", repr(v), "q =", np.round(q, 12).tolist())

# Condition chain on the bare formulas: eta = 0.3, h = 2, lhs = 0.1.
eta, h, lhs = 0.3, 2, 0.1
print("rhs_ii  =", repr(abs(np.log(1 - eta ** h)) / h))
print("rhs_iii =", repr(abs(np.log(1 - eta))))

from statsmodels.stats.proportion import proportion_confint
for k, n in [(5, 100), (0, 50), (37, 10000)]:
    print(f"wilson {k}/{n} =", proportion_confint(k, n, method="wilson"))
