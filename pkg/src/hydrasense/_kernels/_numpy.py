"""NumPy reference implementations of the hot kernels.

These are the behavioural reference for the compiled backend: same update
order, same tie-breaking, so both backends agree on any input without
exact floating-point ties.
"""

import numpy as np

_EPS = 1e-4  # minimum relative alpha step accepted by SMO


def knn_predict(train_x, train_y, query_x, k):
    """Majority-vote k-NN with binary integer labels.

    Neighbours are ordered by (squared distance, training index); a tied
    vote goes to the class of the single nearest neighbour.
    """
    train_x = np.ascontiguousarray(train_x, dtype=np.float64)
    query_x = np.ascontiguousarray(query_x, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    t2 = np.einsum("ij,ij->i", train_x, train_x)
    q2 = np.einsum("ij,ij->i", query_x, query_x)
    d = q2[:, None] + t2[None, :] - 2.0 * (query_x @ train_x.T)
    order = np.argsort(d, axis=1, kind="stable")[:, :k]
    votes = train_y[order]
    pos = votes.sum(axis=1)
    pred = np.where(2 * pos > k, 1, 0).astype(np.int64)
    tie = 2 * pos == k
    pred[tie] = votes[tie, 0]
    return pred


def _smo_objective(K, y, alpha):
    v = alpha * y
    return 0.5 * v @ (K @ v) - alpha.sum()


def smo_solve(K, y, C, tol, max_sweeps=1000, record_objective=False):
    """Soft-margin SVM dual via sequential minimal optimization.

    Platt-style working-set selection made fully deterministic: the second
    index maximizes |E_i - E_j| over non-bound points (first maximum wins)
    with fallback scans starting at (i + 1) mod n.

    Returns (alpha, b, sweeps, objective_per_sweep).
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = len(y)
    alpha = np.zeros(n)
    state = {"b": 0.0}
    E = -y.copy()  # f = 0 at alpha = 0
    objective = []

    def take_step(i1, i2):
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = E[i1], E[i2]
        s = y1 * y2
        if s > 0:
            L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        else:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        if L == H:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2new = a2 + y2 * (E1 - E2) / eta
            a2new = min(max(a2new, L), H)
        else:
            b = state["b"]
            f1 = y1 * (E1 + b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (E2 + b) - s * a1 * k12 - a2 * k22
            L1 = a1 + s * (a2 - L)
            H1 = a1 + s * (a2 - H)
            obj_l = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
            obj_h = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
            if obj_l < obj_h - 1e-12:
                a2new = L
            elif obj_l > obj_h + 1e-12:
                a2new = H
            else:
                return False
        if abs(a2new - a2) < _EPS * (a2new + a2 + _EPS):
            return False
        a1new = a1 + s * (a2 - a2new)
        b1 = E1 + y1 * (a1new - a1) * k11 + y2 * (a2new - a2) * k12 + state["b"]
        b2 = E2 + y1 * (a1new - a1) * k12 + y2 * (a2new - a2) * k22 + state["b"]
        if 0.0 < a1new < C:
            bnew = b1
        elif 0.0 < a2new < C:
            bnew = b2
        else:
            bnew = 0.5 * (b1 + b2)
        E += y1 * (a1new - a1) * K[i1] + y2 * (a2new - a2) * K[i2] + (bnew - state["b"])
        alpha[i1] = a1new
        alpha[i2] = a2new
        state["b"] = bnew
        return True

    def examine(i2):
        y2, a2, E2 = y[i2], alpha[i2], E[i2]
        r2 = E2 * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
            return False
        nonbound = np.nonzero((alpha > 0.0) & (alpha < C))[0]
        if len(nonbound) > 1:
            i1 = nonbound[np.argmax(np.abs(E[nonbound] - E2))]
            if take_step(int(i1), i2):
                return True
        start = (i2 + 1) % n
        rotated = np.concatenate([nonbound[nonbound >= start], nonbound[nonbound < start]])
        for i1 in rotated:
            if take_step(int(i1), i2):
                return True
        for off in range(n):
            if take_step((start + off) % n, i2):
                return True
        return False

    sweeps = 0
    examine_all = True
    num_changed = 1
    while (num_changed > 0 or examine_all) and sweeps < max_sweeps:
        num_changed = 0
        if examine_all:
            for i in range(n):
                num_changed += examine(i)
        else:
            for i in np.nonzero((alpha > 0.0) & (alpha < C))[0]:
                num_changed += examine(int(i))
        if examine_all:
            examine_all = False
        elif num_changed == 0:
            examine_all = True
        sweeps += 1
        if record_objective:
            objective.append(_smo_objective(K, y, alpha))
    return alpha, state["b"], sweeps, np.asarray(objective)


def best_split(X, y, w):
    """Best single-feature Gini split.

    Scans features in ascending order, thresholds ascending within each
    feature (midpoints between distinct sorted values); strict improvement
    required, so the first encountered optimum wins.  Running sums are
    strictly sequential, matching the compiled backend bit for bit.

    Returns (feature, threshold, impurity_decrease); feature is -1 when no
    split improves on the parent node.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    n, d = X.shape
    wp_all = np.cumsum(w * y)
    w_all = np.cumsum(w)
    W = float(w_all[-1])
    Wp = float(wp_all[-1])
    if W <= 0.0:
        return -1, np.nan, 0.0
    parent = 1.0 - (Wp / W) ** 2 - ((W - Wp) / W) ** 2
    best_f, best_thr, best_dec = -1, np.nan, 0.0
    for f in range(d):
        v = X[:, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        cw = np.cumsum(w[order])
        cwp = np.cumsum((w * y)[order])
        cut = np.nonzero(vs[:-1] < vs[1:])[0]
        if cut.size == 0:
            continue
        WL = cw[cut]
        WpL = cwp[cut]
        WR = W - WL
        WpR = Wp - WpL
        gl = 1.0 - (WpL / WL) ** 2 - ((WL - WpL) / WL) ** 2
        gr = 1.0 - (WpR / WR) ** 2 - ((WR - WpR) / WR) ** 2
        dec = parent - (WL * gl + WR * gr) / W
        j = int(np.argmax(dec))
        if dec[j] > best_dec:
            best_f = f
            best_thr = 0.5 * (vs[cut[j]] + vs[cut[j] + 1])
            best_dec = float(dec[j])
    return best_f, best_thr, best_dec
