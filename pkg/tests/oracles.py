"""Independent reference computations for the test suite.

Nothing here imports the package's numerical code; each function is a
direct, slow transcription used only to check the fast paths.
"""

import math

import mpmath


def exp_neg(x, digits=30):
    """exp(-x) in arbitrary precision, rounded to a float."""
    mpmath.mp.dps = digits
    return float(mpmath.e ** (-mpmath.mpf(x)))


def poly(coeffs, x):
    return sum(c * x**n for n, c in enumerate(coeffs))


def recurrence(params, coeffs, capacity, soc_init, time, current):
    """Step-by-step 2RC terminal voltage; returns (voltage, v1, v2, soc) lists."""
    r0, r1, c1, r2, c2 = params
    v1 = v2 = 0.0
    soc = soc_init
    out_v, out_1, out_2, out_s = [], [], [], []
    for k in range(len(time)):
        i = current[k]
        if k > 0:
            dt = time[k] - time[k - 1]
            a1 = math.exp(-dt / (r1 * c1))
            a2 = math.exp(-dt / (r2 * c2))
            v1 = a1 * v1 + r1 * (1 - a1) * i
            v2 = a2 * v2 + r2 * (1 - a2) * i
            soc = min(1.0, max(0.0, soc - i * dt / (3600 * capacity)))
        out_v.append(poly(coeffs, soc) - v1 - v2 - i * r0)
        out_1.append(v1)
        out_2.append(v2)
        out_s.append(soc)
    return out_v, out_1, out_2, out_s


def mse(a, b):
    return math.fsum((x - y) ** 2 for x, y in zip(a, b)) / len(a)


def normal_equations_fit(points, degree):
    """Least-squares polynomial via explicit normal equations and Gaussian elimination."""
    n = degree + 1
    ata = [[0.0] * n for _ in range(n)]
    atb = [0.0] * n
    for x, y in points:
        row = [x**k for k in range(n)]
        for i in range(n):
            atb[i] += row[i] * y
            for j in range(n):
                ata[i][j] += row[i] * row[j]
    # Gauss-Jordan with partial pivoting.
    m = [ata[i] + [atb[i]] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col:
                f = m[r][col] / m[col][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def interpolate(xs, ys, x):
    """Piecewise-linear interpolation by bracket search."""
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    lo = 0
    while xs[lo + 1] < x:
        lo += 1
    x0, x1 = xs[lo], xs[lo + 1]
    if x == x1:
        return ys[lo + 1]
    w = (x - x0) / (x1 - x0)
    return ys[lo] + w * (ys[lo + 1] - ys[lo])


def central_gradient(f, theta, rel_step=1e-6):
    """Central differences with a step proportional to each coordinate."""
    grad = []
    for j in range(len(theta)):
        h = rel_step * abs(theta[j])
        up = list(theta)
        dn = list(theta)
        up[j] += h
        dn[j] -= h
        grad.append((f(up) - f(dn)) / (2 * h))
    return grad
