"""Independent reference implementations used as test oracles.

Nothing here imports dagprop; every routine is written with plain Python
loops and the math module so that agreement is meaningful.
"""

import math


def chain_backprop(weights, x, d, g, dg):
    """Textbook layer-by-layer backprop for a chain net, one sample.

    ``weights[k]`` is a nested list of shape (n_k, n_{k+1}); returns the
    list of gradient matrices for E = ||d - y||^2 / 2.
    """
    hs = [list(x)]
    ss = [None]
    for W in weights:
        h = hs[-1]
        s = [sum(h[a] * W[a][b] for a in range(len(h))) for b in range(len(W[0]))]
        ss.append(s)
        hs.append([g(v) for v in s])
    y = hs[-1]
    delta = [dg(ss[-1][b]) * (y[b] - d[b]) for b in range(len(y))]
    grads = [None] * len(weights)
    for k in range(len(weights) - 1, -1, -1):
        W = weights[k]
        h = hs[k]
        grads[k] = [[h[a] * delta[b] for b in range(len(delta))] for a in range(len(h))]
        if k:
            delta = [
                dg(ss[k][a]) * sum(W[a][b] * delta[b] for b in range(len(delta)))
                for a in range(len(h))
            ]
    return grads


def adaptive_momentum_update(q, dv, eta, s):
    """Pure-Python increment for one edge; q and dv are nested lists."""
    tau = s * eta
    qn = math.sqrt(math.fsum(v * v for row in q for v in row))
    dn = math.sqrt(math.fsum(v * v for row in dv for v in row))
    coef = tau * qn / dn if dn != 0.0 else 0.0
    return [[coef * dv[i][j] - eta * q[i][j] for j in range(len(q[0]))] for i in range(len(q))]


def psnr(ref, rec, data_range=1.0):
    n = 0
    acc = 0.0
    for r_row, c_row in zip(ref, rec):
        for a, b in zip(r_row, c_row):
            acc += (a - b) ** 2
            n += 1
    mse = acc / n
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(data_range**2 / mse)


def nrmse(ref, rec):
    num = 0.0
    den = 0.0
    n = 0
    for r_row, c_row in zip(ref, rec):
        for a, b in zip(r_row, c_row):
            num += (a - b) ** 2
            den += a * a
            n += 1
    return math.sqrt(num / n) / math.sqrt(den / n)


def _gauss(size, sigma=1.5):
    c = (size - 1) / 2.0
    w = [[math.exp(-((i - c) ** 2 + (j - c) ** 2) / (2 * sigma * sigma)) for j in range(size)] for i in range(size)]
    total = sum(sum(row) for row in w)
    return [[v / total for v in row] for row in w]


def ssim(ref, rec, data_range=1.0):
    """Window-by-window SSIM with explicit centred moments."""
    rows, cols = len(ref), len(ref[0])
    size = min(11, rows, cols)
    if size % 2 == 0:
        size -= 1
    w = _gauss(size)
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    vals = []
    for top in range(rows - size + 1):
        for left in range(cols - size + 1):
            px = [(w[i][j], ref[top + i][left + j], rec[top + i][left + j]) for i in range(size) for j in range(size)]
            mx = sum(k * a for k, a, _ in px)
            my = sum(k * b for k, _, b in px)
            vx = sum(k * (a - mx) ** 2 for k, a, _ in px)
            vy = sum(k * (b - my) ** 2 for k, _, b in px)
            cxy = sum(k * (a - mx) * (b - my) for k, a, b in px)
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return sum(vals) / len(vals)
