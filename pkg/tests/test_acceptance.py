"""Release gate: nine numbered checks with one printed verdict line each.

Every check re-derives its expected values through an independent route:
ranking against a hand-written elimination solver, geodesics against
Floyd-Warshall, curve metrics against per-threshold recounts, fusion
against hand-traced fixtures, and the full pipeline against synthetic
scenes with known masks. A full run prints a nine-line checklist.
"""

import filecmp
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pansal.cli import main as cli_main
from pansal.config import default_config
from pansal.density import density_map
from pansal.fixation import dct2, idct2
from pansal.fusion import all_pairs_geodesic, maxima_normalize
from pansal.metrics import auc, f_adaptive, f_measure, mae, pr_curve
from pansal.pipeline import detect
from pansal.ranking import rank
from pansal.raster import (
    ColorSpace,
    GroundTruthMask,
    Raster,
    SaliencyMap,
    load_image,
    load_mask,
    resize_bilinear,
    to_gray,
)
from pansal.superpixel import RegionGraph

RADII = (1, 2, 3, 5, 7, 10, 14)


class check:
    """Prints ``criterion N: PASS|FAIL - label`` when the block exits."""

    def __init__(self, number, label, capsys):
        self.number = number
        self.label = label
        self.capsys = capsys
        self.note = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        verdict = "PASS" if exc_type is None else "FAIL"
        detail = f" ({self.note})" if self.note else ""
        with self.capsys.disabled():
            print(f"criterion {self.number}: {verdict} - {self.label}{detail}")
        return False


def graph_from_weights(w):
    w = np.asarray(w, dtype=np.float64)
    n = w.shape[0]
    return RegionGraph(
        weights=w,
        adjacent=w > 0,
        border=np.zeros(n, dtype=bool),
        features=np.zeros((n, 4)),
    )


def random_connected_graph(rng, n):
    """Random symmetric weights over a ring plus extra chords."""
    w = np.zeros((n, n))
    for i in range(n):
        j = (i + 1) % n
        w[i, j] = w[j, i] = rng.random() * 0.9 + 0.1
    extra = rng.integers(0, n, size=(n, 2))
    for i, j in extra:
        if i != j:
            w[i, j] = w[j, i] = rng.random() * 0.9 + 0.1
    return graph_from_weights(w)


def solve_by_elimination(a, b):
    """Gaussian elimination with partial pivoting, no library solver."""
    a = a.astype(np.float64).copy()
    b = b.astype(np.float64).copy()
    n = a.shape[0]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


def floyd_warshall(adjacent, costs):
    """Dense all-pairs relaxation, the textbook triple loop."""
    j = adjacent.shape[0]
    d = np.full((j, j), np.inf)
    np.fill_diagonal(d, 0.0)
    d[adjacent] = costs[adjacent]
    for k in range(j):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def random_cost_graph(rng, n, p=0.35):
    """Symmetric graph with dyadic costs so path sums are float-exact."""
    adj = np.zeros((n, n), dtype=bool)
    costs = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                adj[i, j] = adj[j, i] = True
                c = rng.integers(1, 64) / 256.0
                costs[i, j] = costs[j, i] = c
    return adj, costs


def recount_pr(values, fg):
    """Per-threshold precision/recall by direct comparison, no suffix sums."""
    q = np.rint(values * 255.0).astype(np.int64)
    positives = int(np.count_nonzero(fg))
    precision, recall = [], []
    for k in range(256):
        claimed = q >= k
        tp = int(np.count_nonzero(claimed & fg))
        n_claimed = int(np.count_nonzero(claimed))
        precision.append(tp / n_claimed if n_claimed else 1.0)
        recall.append(tp / positives)
    return np.array(precision), np.array(recall)


def recount_auc(values, fg):
    """ROC area with a hand-rolled trapezoid accumulation."""
    q = np.rint(values * 255.0).astype(np.int64)
    positives = int(np.count_nonzero(fg))
    negatives = int(np.count_nonzero(~fg))
    tpr = [int(np.count_nonzero((q >= k) & fg)) / positives for k in range(256)]
    fpr = [int(np.count_nonzero((q >= k) & ~fg)) / negatives for k in range(256)]
    xs = [0.0] + fpr[::-1] + [1.0]
    ys = [0.0] + tpr[::-1] + [1.0]
    area = 0.0
    for i in range(1, len(xs)):
        area += (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) / 2.0
    return area


def load_stage(path, gt):
    """Stage PNG as a SaliencyMap at the mask's resolution."""
    raw = to_gray(load_image(path)).data
    if raw.shape != gt.values.shape:
        raw = resize_bilinear(raw, gt.width, gt.height)
    return SaliencyMap(raw)


@pytest.fixture(scope="module")
def batch_runs(fixture_corpus, tmp_path_factory):
    """Two identical CLI runs: stage-dumping detection plus evaluation."""
    root = tmp_path_factory.mktemp("gate_runs")
    images = sorted(str(p) for p in fixture_corpus["images"].glob("*.png"))
    runs = {}
    for tag in ("a", "b"):
        out = root / f"run_{tag}"
        assert cli_main(["stages", *images, "-o", str(out)]) == 0
        report = root / f"report_{tag}"
        assert cli_main(
            ["eval", "--pred", str(out), "--gt", str(fixture_corpus["masks"]),
             "-o", str(report), "--csv"]
        ) == 0
        runs[tag] = (out, report)
    return runs


def test_criterion_1_ranking_matches_elimination(capsys):
    rng = np.random.default_rng(11)
    with check(1, "rank matches dense elimination on 200 graphs", capsys) as c:
        start = time.monotonic()
        for _ in range(200):
            n = int(rng.integers(5, 51))
            g = random_connected_graph(rng, n)
            y = rng.random(n)
            got = rank(g, y, alpha=0.99)
            a = np.diag(g.weights.sum(axis=1)) - 0.99 * g.weights
            assert_allclose(got, solve_by_elimination(a, y), rtol=1e-8, atol=0.0)
        two = rank(
            graph_from_weights([[0.0, 0.5], [0.5, 0.0]]), np.array([1.0, 0.0]), alpha=0.99
        )
        assert_allclose(two, [100.5025, 99.4975], atol=1e-3)
        elapsed = time.monotonic() - start
        assert elapsed < 5.0
        c.note = f"{elapsed:.2f}s"


def test_criterion_2_peak_scaling_hand_traces(capsys):
    with check(2, "peak-gap rescaling reproduces both 3x3 traces exactly", capsys):
        v = np.full((3, 3), 0.1)
        v[0, 0] = 0.5
        v[2, 2] = 0.9
        out = maxima_normalize(SaliencyMap(v), thresh=0.1)
        scale = (0.9 - np.array([0.5, 0.9]).mean()) ** 2 / 0.9
        assert_array_equal(out.values, v * scale)

        single = np.full((3, 3), 0.1)
        single[1, 1] = 0.9
        zeroed = maxima_normalize(SaliencyMap(single), thresh=0.1)
        assert_array_equal(zeroed.values, np.zeros((3, 3)))

        kept = maxima_normalize(SaliencyMap(single), thresh=0.1, exclude_global=True)
        assert kept.values.max() > 0.0
        assert_allclose(kept.values, single * 0.9, rtol=1e-12)


def test_criterion_3_geodesic_matches_floyd_warshall(capsys):
    rng = np.random.default_rng(13)
    with check(3, "Dijkstra all-pairs equals Floyd-Warshall on 100 graphs", capsys):
        triples = 0
        for _ in range(100):
            n = int(rng.integers(2, 31))
            adj, costs = random_cost_graph(rng, n)
            d = all_pairs_geodesic(adj, costs)
            assert_array_equal(d, floyd_warshall(adj, costs))
            for _ in range(10):
                i, j, k = rng.integers(0, n, size=3)
                assert d[i, k] <= d[i, j] + d[j, k]
                triples += 1
        assert triples == 1000


def test_criterion_4_spectral_round_trip(capsys):
    rng = np.random.default_rng(17)
    with check(4, "idct2(dct2(x)) returns x on 50 random planes", capsys):
        for _ in range(50):
            h, w = rng.integers(2, 65, size=2)
            x = rng.random((int(h), int(w)))
            back = idct2(dct2(x))
            assert_allclose(back, x, atol=1e-10, rtol=0.0)
        flat = dct2(np.full((16, 24), 0.52))
        assert flat.coefficients[0, 0] > 0.0
        ac = flat.coefficients.copy()
        ac[0, 0] = 0.0
        assert_array_equal(ac, np.zeros((16, 24)))


def test_criterion_5_density_plane_band(capsys):
    with check(5, "constant-image exponents sit in the plane band", capsys):
        flat = Raster(np.full((44, 44), 0.6), ColorSpace.GRAY)
        d = density_map(flat, RADII).values
        interior = d[14:-14, 14:-14]
        assert interior.size > 0
        assert interior.min() >= 1.8
        assert interior.max() <= 2.2
        scaled = Raster(np.full((44, 44), 0.6 * 0.37), ColorSpace.GRAY)
        d2 = density_map(scaled, RADII).values
        assert_allclose(d2, d, atol=1e-9, rtol=1e-9)


def test_criterion_6_metric_recount(capsys):
    rng = np.random.default_rng(19)
    with check(6, "curve metrics match per-threshold recounts on 20 pairs", capsys):
        for _ in range(20):
            values = rng.random((64, 64))
            fg = rng.random((64, 64)) < 0.3
            assert fg.any() and (~fg).any()
            pred = SaliencyMap(values)
            gt = GroundTruthMask(fg.astype(np.uint8))

            want_p, want_r = recount_pr(values, fg)
            got_p, got_r = pr_curve(pred, gt)
            assert_allclose(got_p, want_p, atol=1e-9, rtol=0.0)
            assert_allclose(got_r, want_r, atol=1e-9, rtol=0.0)

            assert abs(auc(pred, gt) - recount_auc(values, fg)) <= 1e-9

            per_pixel = sum(
                abs(float(values[y, x]) - float(fg[y, x]))
                for y in range(64)
                for x in range(64)
            )
            assert abs(mae(pred, gt) - per_pixel / values.size) <= 1e-9

            t = 2.0 * values.mean()
            claimed = values >= t
            tp = int(np.count_nonzero(claimed & fg))
            p = tp / int(np.count_nonzero(claimed)) if claimed.any() else 1.0
            r = tp / int(np.count_nonzero(fg))
            f = 1.3 * p * r / (0.3 * p + r) if (p > 0 or r > 0) else 0.0
            got = f_adaptive(pred, gt)
            assert abs(got[0] - p) <= 1e-9
            assert abs(got[1] - r) <= 1e-9
            assert abs(got[2] - f) <= 1e-9

        assert f_measure(1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
        assert f_measure(1.0, 0.5) == pytest.approx(0.8125, abs=1e-12)


def test_criterion_7_synthetic_scenes(fixture_corpus, capsys):
    config = default_config()
    with check(7, "synthetic scenes detected within budget", capsys) as c:
        passing = 0
        slowest = 0.0
        for name in fixture_corpus["names"]:
            start = time.monotonic()
            result = detect(fixture_corpus["images"] / f"{name}.png", config)
            elapsed = time.monotonic() - start
            slowest = max(slowest, elapsed)
            assert elapsed <= 10.0

            gt = load_mask(fixture_corpus["masks"] / f"{name}.png")
            fg = gt.values == 1
            v = result.final.values
            gap = float(v[fg].mean() - v[~fg].mean())
            _, _, f = f_adaptive(result.final, gt)
            print(f"{name}: gap {gap:.3f}, F {f:.3f}, {elapsed:.2f}s")
            if gap >= 0.3 and f >= 0.7:
                passing += 1
        assert passing >= 8
        c.note = f"{passing}/10 scenes, slowest {slowest:.2f}s"


def test_criterion_8_stage_gain_monotone(fixture_corpus, batch_runs, capsys):
    run_dir, _ = batch_runs["a"]
    with check(8, "aggregate F never drops across fusion stages", capsys) as c:
        f_p1, f_comb, f_final = [], [], []
        for name in fixture_corpus["names"]:
            stages = run_dir / f"{name}_stages"
            gt = load_mask(fixture_corpus["masks"] / f"{name}.png")
            for bucket, filename in (
                (f_p1, "05_pathway1.png"),
                (f_comb, "10_combined.png"),
                (f_final, "11_final.png"),
            ):
                _, _, f = f_adaptive(load_stage(stages / filename, gt), gt)
                bucket.append(f)
            print(f"{name}: F p1 {f_p1[-1]:.3f} comb {f_comb[-1]:.3f} final {f_final[-1]:.3f}")
        p1, comb, final = np.mean(f_p1), np.mean(f_comb), np.mean(f_final)
        assert comb >= p1 - 0.02
        assert final >= comb - 0.02
        c.note = f"F p1 {p1:.4f} combined {comb:.4f} final {final:.4f}"


def test_criterion_9_batch_determinism(batch_runs, capsys):
    with check(9, "repeated batch runs are byte-identical", capsys) as c:
        compared = 0
        for (dir_a, dir_b) in (
            (batch_runs["a"][0], batch_runs["b"][0]),
            (batch_runs["a"][1], batch_runs["b"][1]),
        ):
            files_a = sorted(p.relative_to(dir_a) for p in dir_a.rglob("*") if p.is_file())
            files_b = sorted(p.relative_to(dir_b) for p in dir_b.rglob("*") if p.is_file())
            assert files_a == files_b
            for rel in files_a:
                assert filecmp.cmp(dir_a / rel, dir_b / rel, shallow=False), rel
                compared += 1
        assert compared > 0
        c.note = f"{compared} files"
