"""Independent reference values for the C++ tests (exact Python arithmetic)."""
import itertools
import math
from fractions import Fraction

import mpmath
import sympy


def necessary(n, d, dp, L):
    big, small = max(d, dp), min(d, dp)
    rad = 2 * n * dp + (big + 1) ** 2 - 2 * small - 4 * L + 5
    return 0.0 if rad <= 0 else math.sqrt(rad) - big + dp + L - 2


def params(d, widths, dp):
    chain = [d] + list(widths)
    return sum(a * b for a, b in zip(chain, chain[1:])) + sum(widths) + dp * widths[-1]


def brute(n, d, dp, L, cap):
    best, arg, viol = None, None, 0
    bound = necessary(n, d, dp, L)
    for w in itertools.product(range(1, cap + 1), repeat=L):
        if params(d, w, dp) < n * dp:
            continue
        count = sum(w) + dp
        if count < bound:
            viol += 1
        if best is None or count < best:
            best, arg = count, w
    return viol, best, arg


def ceil_sqrt(x):
    r = math.isqrt(x)
    return r if r * r == x else r + 1


def sufficient(n, d, dp, L):
    return [1] * (L - 2) + [ceil_sqrt(2 * n * dp) + 1, dp * ceil_sqrt(-(-2 * n // dp))]


def compositions(r, ell, K):
    return [c for c in itertools.product(sorted(K), repeat=ell) if sum(c) == r]


def gamma(ell, r, alpha):
    return sum(math.prod(alpha[k] for k in c) for c in compositions(r, ell, alpha.keys()))


print("necessary", repr(necessary(100, 10, 1, 2)), repr(math.sqrt(316) - 9))
print("necessary", repr(necessary(200, 3, 2, 3)), repr(math.sqrt(805)))
print("necessary", necessary(1, 1, 1, 2))
print("params", params(10, (5, 5), 1), params(1, (1, 1), 1), params(2, (3, 4, 2), 3))
print("sufficient", sufficient(100, 10, 1, 2), sufficient(50, 5, 2, 2), sufficient(8, 2, 1, 3), sufficient(50, 5, 2, 3))
print("brute (100,10,1,2) cap 12", brute(100, 10, 1, 2, 12))
print("brute (1,1,1,2) cap 3", brute(1, 1, 1, 2, 3))
print("brute (20,2,2,2) cap 10", brute(20, 2, 2, 2, 10))
print("brute (5,2,1,3) cap 6", brute(5, 2, 1, 3, 6))
print("brute (200,5,2,3) cap 27", brute(200, 5, 2, 3, 27))
print("brute (100,1,10,4) cap 18", brute(100, 1, 10, 4, math.ceil(necessary(100, 1, 10, 4)) + 2))
print("tanh(1)", repr(math.tanh(1.0)))
print("compositions", compositions(4, 2, {0, 1, 2, 3}), compositions(0, 0, {1}), compositions(5, 1, {0, 2, 4}))
a1 = {0: Fraction(1), 1: Fraction(2), 2: Fraction(-3), 3: Fraction(5, 7)}
a2 = {0: Fraction(-1, 2), 1: Fraction(3), 2: Fraction(4, 3), 3: Fraction(-2)}
for a in (a1, a2):
    print("gamma(2,4)", gamma(2, 4, a), 2 * a[1] * a[3] + a[2] ** 2)
print("gamma unit", gamma(2, 4, {k: 1 for k in range(4)}))
x = sympy.symbols("x")
print("tanh series", sympy.series(sympy.tanh(x), x, 0, 10).removeO())
print("sigmoid series", sympy.series(1 / (1 + sympy.exp(-x)), x, 0, 8).removeO())
print("arctan series", sympy.series(sympy.atan(x), x, 0, 8).removeO())
print("softplus series", sympy.series(sympy.log(1 + sympy.exp(x)), x, 0, 6).removeO())
print("gelu series", sympy.series(x * (1 + sympy.erf(x / sympy.sqrt(2))) / 2, x, 0, 6).removeO())
M = sympy.Matrix([[3, -1, 4, 1, 5], [9, 2, -6, 5, 3], [5, 8, 9, -7, 9], [3, 2, 3, 8, -4], [6, 2, -6, 4, 3]])
print("det5", M.det())
A = sympy.Matrix([[1, 2, 3], [4, 5, 6]])
B = sympy.Matrix([[7, -1], [0, 2], [3, 5]])
print("cauchy-binet", (A * B).det())
fs = [[1 * 3, 2 * 3], [0 * 4, 1 * 4]]
print("face_split", fs)
print("rank bounds", min(2, 6 // 3) * 3, min(5, 10 // 2) * 2, min(6, 8 // 2) * 2)
with mpmath.workdps(30):
    print("tanh radius", mpmath.findroot(mpmath.cosh, 1.5j))
