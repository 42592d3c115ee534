"""Independent derivation of the hand-checkable expected values used by the tests.

Pure Python only (fractions, itertools, math): nothing here imports the
package or numpy.  Run ``python3 tests/oracles/derive.py`` to regenerate
``frozen.json``; the tests read that file and never recompute these values.
"""
from fractions import Fraction
from itertools import product
import json
import math
from pathlib import Path


def luma_red():
    return Fraction(299, 1000) * 1 + Fraction(587, 1000) * 0 + Fraction(114, 1000) * 0


def ramp_interior_magnitude(n=8):
    img = [[Fraction(x, n) for x in range(n)] for _ in range(n)]
    mags = set()
    for y in range(1, n - 1):
        for x in range(1, n - 1):
            gx = (img[y][x + 1] - img[y][x - 1]) / 2
            gy = (img[y + 1][x] - img[y - 1][x]) / 2
            assert gy == 0
            mags.add(abs(gx))
    assert len(mags) == 1
    return mags.pop()


def mean_2x2():
    vals = [1, 0, 0, 0]
    return Fraction(sum(vals), len(vals))


def ingest_minmax():
    scores = [2, 4, 8]
    lo, hi = min(scores), max(scores)
    kept = sorted(scores, reverse=True)[:2]
    return [Fraction(s - lo, hi - lo) for s in kept]


def dense_lattice(side=64, support=16, stride=4):
    per_axis = len(range(0, side - support + 1, stride))
    return per_axis * per_axis


def spm_single_point():
    # one count in the global region and one in a fine cell, then L2 normalise
    return 1 / math.sqrt(2)


def far_weight(scale=0.05):
    # d = dmax, sigma = scale * dmax  ->  exp(-1 / (2 scale^2))
    return -1 / (2 * scale * scale), math.exp(-1 / (2 * scale * scale))


def sigma_from_distances(dists, scale=Fraction(1, 20)):
    return scale * max(dists)


def two_node_laplacian():
    # W = [[0,1],[1,0]], D = I  ->  L = I - W; eigenvalues of [[1,-1],[-1,1]]: 1 -+ 1
    L = [[1, -1], [-1, 1]]
    tr = L[0][0] + L[1][1]
    det = L[0][0] * L[1][1] - L[0][1] * L[1][0]
    disc = math.sqrt(tr * tr - 4 * det)
    return L, sorted([(tr - disc) / 2, (tr + disc) / 2])


def ncut(w, in_a):
    n = len(w)
    cut = sum(w[i][j] for i in range(n) for j in range(n) if in_a[i] and not in_a[j])
    vol_a = sum(w[i][j] for i in range(n) for j in range(n) if in_a[i])
    vol_b = sum(w[i][j] for i in range(n) for j in range(n) if not in_a[i])
    return cut / vol_a + cut / vol_b


def two_cliques():
    n = 6
    w = [[0.0] * n for _ in range(n)]
    for block in ((0, 1, 2), (3, 4, 5)):
        for i in block:
            for j in block:
                if i != j:
                    w[i][j] = 1.0
    w[2][3] = w[3][2] = 1e-6
    best, best_split = None, None
    for bits in product((False, True), repeat=n):
        if all(bits) or not any(bits) or bits[0]:  # fix node 0 in B to skip mirrored splits
            continue
        v = ncut(w, bits)
        if best is None or v < best:
            best, best_split = v, [i for i in range(n) if bits[i]]
    return w, best_split, best


def group_score_example():
    return Fraction(1, 2) * 1 + Fraction(1, 5) * Fraction(1, 2)


def fuse_example():
    boxes = [(0, 0, 10, 10), (10, 10, 10, 10)]
    corners = [(x, y, x + w, y + h) for x, y, w, h in boxes]
    mean = [Fraction(sum(c[i] for c in corners), len(corners)) for i in range(4)]
    x1, y1, x2, y2 = (math.floor(m + Fraction(1, 2)) for m in mean)
    return [x1, y1, x2 - x1, y2 - y1]


def iou_frac(a, b):
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = max(0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    return Fraction(inter, aw * ah + bw * bh - inter)


def two_gt_boxes():
    """Smallest search for a prediction overlapping two boxes at IoU exactly 3/10 and 3/5."""
    pred = (10, 10, 10, 10)
    want = (Fraction(3, 10), Fraction(3, 5))
    found = [None, None]
    for x, y, w, h in product(range(0, 21), range(0, 21), range(1, 21), range(1, 21)):
        v = iou_frac(pred, (x, y, w, h))
        for k in range(2):
            if found[k] is None and v == want[k]:
                found[k] = (x, y, w, h)
        if all(found):
            break
    return pred, found


def table_average():
    entries = [Fraction("43.9"), Fraction("65.17"), Fraction("45.16")]
    return sum(entries) / len(entries)


def main():
    far_exp, far_w = far_weight()
    L, eig = two_node_laplacian()
    w, split, best = two_cliques()
    pred, gts = two_gt_boxes()
    frozen = {
        "luma_red": float(luma_red()),
        "ramp8_interior_magnitude": float(ramp_interior_magnitude()),
        "mean_2x2_single_one": float(mean_2x2()),
        "ingest_sobj_top2": [float(v) for v in ingest_minmax()],
        "dense_lattice_64": dense_lattice(),
        "spm_single_point_entry": spm_single_point(),
        "far_weight_exponent": far_exp,
        "far_weight": far_w,
        "sigma_max_distance_4": float(sigma_from_distances([1, 3, 4])),
        "two_node_laplacian": L,
        "two_node_eigenvalues": eig,
        "two_cliques_min_ncut_side": split,
        "two_cliques_min_ncut": best,
        "fiedler_two_node": [1 / math.sqrt(2), -1 / math.sqrt(2)],
        "group_score_k3": float(group_score_example()),
        "fuse_two_boxes": fuse_example(),
        "iou_half_shift": float(iou_frac((0, 0, 10, 10), (5, 0, 10, 10))),
        "iou_two_gts": {"pred": list(pred), "gt_03": list(gts[0]), "gt_06": list(gts[1])},
        "table_average": float(table_average()),
    }
    out = Path(__file__).with_name("frozen.json")
    out.write_text(json.dumps(frozen, indent=1, sort_keys=True) + "\n")
    print(json.dumps(frozen, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
