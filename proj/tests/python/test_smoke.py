import json
import math

import numpy as np
import pytest
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import jensenshannon
from scipy.stats import skew

import locvec


@pytest.fixture(scope="module")
def community(tmp_path_factory):
    out = tmp_path_factory.mktemp("community")
    code, _, err = locvec.run(["synth", "community", "--out", str(out), "--seed", "5",
                               "--option", "entities=2000", "--option", "dim=8"])
    assert code == 0, err
    return out


def test_geometry():
    assert locvec.cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(1.0)
    assert locvec.great_circle_km(10, 20, 10, 20) == 1.0
    assert locvec.great_circle_km(0, 0, 0, 180) == pytest.approx(math.pi * 6371.0088, abs=1e-6)
    with pytest.raises(locvec.DomainError):
        locvec.cosine_distance(np.zeros(2), np.ones(2))


def test_train_save_load(community, tmp_path):
    visits = locvec.read_visits(community / "visits.csv")
    model = locvec.train(visits, dim=8, epochs=2, min_count=5, seed=3)
    again = locvec.train(visits, dim=8, epochs=2, min_count=5, seed=3)
    assert np.array_equal(model.in_vectors, again.in_vectors)
    assert model.in_vectors.shape == (len(model), 8)
    for k in (0, len(model) - 1):
        assert np.array_equal(model.in_vectors[k], model.vector(model.tokens[k]))
    model.save(tmp_path / "m.vec")
    loaded = locvec.load_model(tmp_path / "m.vec")
    assert loaded.tokens == model.tokens
    assert np.array_equal(loaded.in_vectors, model.in_vectors)
    with pytest.raises(locvec.LookupError):
        model.vector("no-such-location")


def test_gravity_recovers_planted_exponent():
    rng = np.random.default_rng(0)
    n = 400
    mi, mj = rng.lognormal(4, 1, n), rng.lognormal(4, 1, n)
    r = rng.uniform(5, 3000, n)
    flux = 3.0 * mi * mj * r ** -1.7
    fit = locvec.fit_gravity(flux, mi, mj, r, family="power")
    assert fit["decay"] == pytest.approx(1.7, abs=1e-9)
    assert fit["ln_c"] == pytest.approx(math.log(3.0), abs=1e-9)
    assert fit["r_squared"] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(locvec.FitError):
        locvec.fit_gravity(flux[:2], mi[:2], mj[:2], r[:2])


def test_ppr_matches_linear_solve():
    rng = np.random.default_rng(1)
    n = 12
    edges, w = [], np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.4 or j == i + 1:
                x = float(rng.uniform(0.5, 3))
                edges.append((i, j, x))
                w[i, j] = w[j, i] = x
    alpha = 0.9
    wbar = w / w.sum(axis=1, keepdims=True)
    e = np.zeros(n)
    e[3] = 1.0
    expect = np.linalg.solve((np.eye(n) - alpha * wbar).T, (1 - alpha) * e)
    got = locvec.ppr(n, edges, 3, alpha=alpha)
    assert np.allclose(got, expect, atol=1e-10)

    q = locvec.ppr(n, edges, 7)
    assert locvec.jsd(got, q) == pytest.approx(jensenshannon(got, q) ** 2, abs=1e-12)
    assert 0 <= locvec.jsd(got, q) <= math.log(2)

    c = locvec.eigenvector_centrality(n, edges)
    vals, vecs = np.linalg.eigh(w)
    lead = np.abs(vecs[:, -1])
    assert np.allclose(c / c.max(), lead / lead.max(), atol=1e-8)


def test_semaxis_planted_order(tmp_path):
    ids = [f"L{i:02d}" for i in range(10)]
    vecs = [[4.5 - i, 1.0, 0.5] for i in range(10)]
    p = tmp_path / "m.vec"
    p.write_text(f"{len(ids)} 3\n" + "".join(
        f"{t} {' '.join(repr(x) for x in v)}\n" for t, v in zip(ids, vecs)))
    model = locvec.load_model(p)
    ranked = locvec.rank_by_axis(model, ids, [ids[0]], [ids[-1]])
    assert [r[0] for r in ranked] == ids
    table = {t: float(k + 1) for k, (t, _) in enumerate(ranked)}
    assert locvec.spearman(table, {t: float(k + 1) for k, t in enumerate(ids)}) == pytest.approx(1.0)
    with pytest.raises(locvec.InputError):
        locvec.rank_by_axis(model, ids, [ids[0]], [ids[0]])


def test_clustering_matches_scipy():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(15, 4))
    labels = [f"c{i:02d}" for i in range(15)]
    z = locvec.hierarchical_cluster(labels, x.tolist(), "average")
    assert len(z.merges) == 14
    ours = z.cut(4)
    ref = fcluster(linkage(x, "average", metric="cosine"), 4, criterion="maxclust")
    pairs = lambda lab: {(i, j) for i in range(15) for j in range(i + 1, 15) if lab[i] == lab[j]}
    assert pairs(ours) == pairs(ref)
    assert locvec.element_centric_similarity(ours, ours) == pytest.approx(1.0)
    assert locvec.element_centric_similarity([0, 1, 2, 3], [0, 0, 0, 0]) == pytest.approx(0.25)


def test_inequality_stats():
    v = np.array([1.0, 2.0, 3.0, 10.0])
    ref = np.abs(v[:, None] - v[None, :]).sum() / (2 * len(v) ** 2 * v.mean())
    assert locvec.gini(v) == pytest.approx(ref, abs=1e-14)
    assert locvec.skewness(v) == pytest.approx(skew(v, bias=False), abs=1e-12)


def test_cli_pipeline(community):
    cfg = str(community / "config.toml")
    for cmd in ("train", "gravity", "semaxis", "analyze"):
        code, _, err = locvec.run([cmd, "-c", cfg, "--set", "train.epochs=2"])
        assert code == 0, err
    report = json.loads((community / "out" / "gravity_report.json").read_text())
    assert [f["distance_kind"] for f in report["fits"]] == ["GeographicKm", "EmbeddingCosine"]
    code, _, err = locvec.run(["train", "--visits", "/nonexistent/v.csv"])
    assert code == 2
