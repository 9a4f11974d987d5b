"""Reference implementations of the hot kernels (numpy only)."""
import numpy as np

BACKEND = "python"


def family_scores(grad, fam_ptr, grp_ptr, grp_rate, grp_cap, users):
    """Best linear objective attainable inside each policy family.

    A family is a run of groups ``fam_ptr[f]:fam_ptr[f+1]``; group ``g`` owns
    ``users[grp_ptr[g]:grp_ptr[g+1]]`` and contributes ``grp_rate[g]`` times
    the sum of its ``grp_cap[g]`` largest gradient entries.
    """
    grad = np.asarray(grad, dtype=np.float64)
    n_groups = len(grp_rate)
    n_fam = len(fam_ptr) - 1
    if n_groups == 0:
        return np.zeros(n_fam)
    vals = grad[users]
    sizes = np.diff(grp_ptr)
    starts = grp_ptr[:-1]
    best = np.empty(n_groups)
    take_all = grp_cap >= sizes
    take_one = (grp_cap == 1) & ~take_all
    if take_all.any():
        best[take_all] = np.add.reduceat(vals, starts)[take_all]
    if take_one.any():
        best[take_one] = np.maximum.reduceat(vals, starts)[take_one]
    for g in np.flatnonzero(~(take_all | take_one)):
        seg = vals[starts[g]:starts[g] + sizes[g]]
        best[g] = np.sort(seg)[::-1][: grp_cap[g]].sum()
    contrib = best * grp_rate
    scores = np.zeros(n_fam)
    nonempty = np.diff(fam_ptr) > 0
    if nonempty.any():
        scores[nonempty] = np.add.reduceat(contrib, fam_ptr[:-1][nonempty])
    return scores


def pareto_mask(vectors):
    """Mask of the Pareto-maximal rows of ``vectors``; duplicates keep one copy."""
    V = np.asarray(vectors, dtype=np.float64)
    n = len(V)
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    # sum descending, then lexicographically descending: a dominating row always comes first
    order = np.lexsort(tuple(-V[:, j] for j in range(V.shape[1] - 1, -1, -1)) + (-V.sum(axis=1),))
    kept = []
    for idx in order:
        v = V[idx]
        if kept and np.any(np.all(V[kept] >= v, axis=1)):
            continue
        kept.append(idx)
        keep[idx] = True
    return keep
