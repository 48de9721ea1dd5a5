import numpy as np
import pytest

from dcct.datagen import (
    DatasetSpec,
    Sample,
    as_arrays,
    confusable_pairs,
    dump_csv,
    generate,
    load_csv,
    split_query_gallery,
)
from dcct.errors import ConfigError


def test_deterministic_by_seed():
    spec = DatasetSpec(n_identities=8, samples_per_identity=4, seed=7)
    a, _ = generate(spec)
    b, _ = generate(spec)
    assert [s.input.tobytes() for s in a] == [s.input.tobytes() for s in b]
    assert [(s.identity, s.camera) for s in a] == [(s.identity, s.camera) for s in b]


def test_zero_noise_samples_equal_centers():
    spec = DatasetSpec(n_identities=6, samples_per_identity=5, intra_noise_sigma=0.0, camera_distortion_scale=0.0)
    samples, ids = generate(spec)
    for s in samples:
        np.testing.assert_array_equal(s.input, ids[s.identity].center)


def test_size_and_camera_coverage():
    spec = DatasetSpec(n_identities=64, samples_per_identity=16)
    samples, ids = generate(spec)
    assert len(samples) == 1024
    assert len(ids) == 64
    cams = {}
    for s in samples:
        cams.setdefault(s.identity, set()).add(s.camera)
    assert all(len(c) >= 2 for c in cams.values())
    assert all(np.isfinite(s.input).all() for s in samples)


def test_centers_unit_and_distinct():
    _, ids = generate(DatasetSpec(n_identities=20, samples_per_identity=2))
    c = np.stack([i.center for i in ids])
    np.testing.assert_allclose(np.linalg.norm(c, axis=1), 1.0, atol=1e-12)
    d = np.linalg.norm(c[:, None] - c[None], axis=2)
    assert (d[~np.eye(20, dtype=bool)] > 0).all()


@pytest.mark.parametrize("seed", range(5))
def test_confusable_pairs_closer_than_others(seed):
    spec = DatasetSpec(n_identities=40, samples_per_identity=2, confusable_fraction=0.5, confusable_gap=0.4, seed=seed)
    _, ids = generate(spec)
    c = np.stack([i.center for i in ids])
    pairs = confusable_pairs(spec)
    conf = [np.linalg.norm(c[a] - c[b]) for a, b in pairs]
    np.testing.assert_allclose(conf, 0.4, atol=1e-12)
    pair_set = set(pairs)
    other = [
        np.linalg.norm(c[a] - c[b])
        for a in range(40)
        for b in range(a + 1, 40)
        if (a, b) not in pair_set
    ]
    assert np.mean(conf) < np.mean(other)


def test_training_view_hides_identity():
    s = Sample(3, np.zeros(2), identity=5, camera=1)
    v = s.view()
    assert v._fields == ("index", "input", "camera")
    assert 5 not in (v.index, v.camera)


@pytest.mark.parametrize(
    "field, value",
    [("n_cameras", 1), ("intra_noise_sigma", -1.0), ("confusable_fraction", 1.5), ("samples_per_identity", 1), ("confusable_gap", 0.0)],
)
def test_invalid_spec_names_field(field, value):
    with pytest.raises(ConfigError) as exc:
        generate(DatasetSpec(**{field: value}))
    assert exc.value.field == field


def test_split_counts_and_disjoint():
    samples, _ = generate(DatasetSpec(n_identities=64, samples_per_identity=16))
    split = split_query_gallery(samples, 0.25, seed=1)
    assert len(split.query) == 256
    assert len(split.gallery) == 768
    assert not set(split.query) & set(split.gallery)
    assert split.excluded_identities == 0
    again = split_query_gallery(samples, 0.25, seed=1)
    np.testing.assert_array_equal(split.query, again.query)


def test_split_every_query_has_cross_camera_match():
    samples, _ = generate(DatasetSpec(n_identities=16, samples_per_identity=6, n_cameras=3))
    split = split_query_gallery(samples, 0.5, seed=0)
    for q in split.query:
        sq = samples[q]
        assert any(
            samples[g].identity == sq.identity and samples[g].camera != sq.camera for g in split.gallery
        )


def test_split_single_camera_identity_excluded():
    samples = [Sample(i, np.zeros(2), identity=0, camera=0) for i in range(4)]
    samples += [Sample(4 + i, np.ones(2), identity=1, camera=i % 2) for i in range(4)]
    samples += [Sample(8, np.ones(2), identity=2, camera=0)]
    split = split_query_gallery(samples, 0.5)
    assert {samples[q].identity for q in split.query} == {1}
    assert split.excluded_identities == 2


def test_csv_round_trip(tmp_path):
    samples, _ = generate(DatasetSpec(n_identities=4, samples_per_identity=3, d_in=5))
    path = tmp_path / "data.csv"
    dump_csv(samples, path)
    header = path.read_text().splitlines()[0]
    assert header.startswith("index,identity,camera,x0")
    back = load_csv(path)
    xa, ia, ca = as_arrays(samples)
    xb, ib, cb = as_arrays(back)
    np.testing.assert_array_equal(xa, xb)
    np.testing.assert_array_equal(ia, ib)
    np.testing.assert_array_equal(ca, cb)
