"""Naive reference trainer used as the oracle for boosting tests.

Implements the same fixed-point weight algebra as the production code
(uniform 2**32 budget with leading-index remainders, error clamp,
beta = err/(budget - err) floor update, largest-remainder renorm) but
with straightforward exhaustive Python loops: every candidate threshold
of every row is scored by a fresh O(N) pass, so it shares none of the
production sweep's cumulative-sum machinery, permutation handling, or
tie-break shortcuts.  Selections (row, threshold) are what it validates;
it never computes alphas, so it is independent of the log table too.
"""

BUDGET = 1 << 32
MAXD = 2**31 - 1


def naive_candidates(row_values):
    finite = sorted({v for v in row_values if v < MAXD})
    return [(a + b) // 2 for a, b in zip(finite, finite[1:])]


def naive_error(row_values, threshold, weights, labels):
    err = 0
    for v, w, l in zip(row_values, weights, labels):
        predicted = 1 if v < threshold else 0
        if predicted != l:
            err += w
    return err


def naive_best_threshold(row_values, weights, labels):
    candidates = naive_candidates(row_values)
    if not candidates:
        return 0, sum(w for w, l in zip(weights, labels) if l == 1), False
    best = None
    for t in candidates:
        e = naive_error(row_values, t, weights, labels)
        if best is None or e < best[1] or (e == best[1] and t < best[0]):
            best = (t, e)
    return best[0], best[1], True


def naive_train_selections(values, labels, rounds):
    """Per-round (row, threshold) selections for a small instance.

    ``values``: list of rows (lists of distances); ``labels``: 0/1 per
    column.  Mirrors the production clamp/update/renormalise rules with
    plain loops and big-int arithmetic.
    """
    n = len(labels)
    weights = [BUDGET // n] * n
    for j in range(BUDGET % n):
        weights[j] += 1
    err_lo = BUDGET // (4 * n)
    err_hi = BUDGET // 2 - err_lo

    selections = []
    for _ in range(rounds):
        best = None  # (err, row, threshold)
        for i, row in enumerate(values):
            t, e, _ = naive_best_threshold(row, weights, labels)
            if best is None or (e, i, t) < best:
                best = (e, i, t)
        err, i_star, t_star = best
        selections.append((i_star, t_star))

        err_c = min(max(err, err_lo), err_hi)
        new_weights = []
        for v, w, l in zip(values[i_star], weights, labels):
            predicted = 1 if v < t_star else 0
            if predicted == l:
                w = w * err_c // (BUDGET - err_c)
            new_weights.append(w)
        total = sum(new_weights)
        base = [w * BUDGET // total for w in new_weights]
        rems = [w * BUDGET - b * total for w, b in zip(new_weights, base)]
        deficit = BUDGET - sum(base)
        for j in sorted(range(n), key=lambda k: (-rems[k], k))[:deficit]:
            base[j] += 1
        weights = base
    return selections
