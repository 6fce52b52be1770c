import json

import numpy as np
import pytest

from datagen import anisotropic_gaussian
from oracles import bilinear_direct

from oforest.codec import encode
from oforest.dataio import (Dataset, SplitSpec, Standardizer, load_codes,
                            load_model, read_csv, read_image, resize_bilinear,
                            row_from_image, save_codes, save_csv, save_model,
                            train_test_split, write_image)
from oforest.errors import (CorruptHeader, NotAnImage, ParseError, RaggedRows,
                            SchemaError, SizesExceedData, UnsupportedFormat,
                            VersionMismatch)
from oforest.forest import ForestConfig, fit


class TestCsv:
    def test_two_by_two(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("1,2\n3,4\n")
        d = read_csv(f)
        assert np.array_equal(d.x, [[1.0, 2.0], [3.0, 4.0]])

    def test_header_and_diabetes_shape(self, tmp_path):
        x = anisotropic_gaussian(442, 10, seed=1)
        f = tmp_path / "d.csv"
        save_csv(x, f, header=[f"f{i}" for i in range(10)])
        d = read_csv(f, has_header=True)
        assert d.n == 442 and d.p == 10
        assert d.feature_names == [f"f{i}" for i in range(10)]
        assert np.array_equal(d.x, x)  # repr round-trip is value-exact

    def test_ragged_names_line(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("1,2\n3,4,5\n")
        with pytest.raises(RaggedRows, match="line 2"):
            read_csv(f)

    def test_parse_error_location(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("1,2\n3,oops\n")
        with pytest.raises(ParseError, match="line 2, column 2"):
            read_csv(f)

    def test_non_finite_rejected(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("1,nan\n")
        with pytest.raises(ParseError):
            read_csv(f)


class TestImages:
    def test_p5_layout(self, tmp_path):
        f = tmp_path / "im.pgm"
        f.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
        d = read_image(f)
        assert d.image_shape == (2, 2, 1)
        assert np.array_equal(d.x[0], [0.0, 128.0, 255.0, 64.0])

    def test_p6_per_channel_blocks(self, tmp_path):
        f = tmp_path / "im.ppm"
        f.write_bytes(b"P6\n3 1\n255\n" + bytes([1, 2, 3, 4, 5, 6, 7, 8, 9]))
        d = read_image(f)
        assert d.image_shape == (1, 3, 3)
        assert d.p == 9
        assert np.array_equal(d.x[0], [1, 4, 7, 2, 5, 8, 3, 6, 9])

    def test_write_read_round_trip(self, tmp_path):
        img = np.arange(12.0).reshape(3, 4) * 20.0
        f = tmp_path / "a.pgm"
        write_image(f, img)
        d = read_image(f)
        assert np.array_equal(d.x[0], img.ravel())
        # canonical file: read then write reproduces the bytes
        g = tmp_path / "b.pgm"
        write_image(g, img)
        assert f.read_bytes() == g.read_bytes()

    def test_rgb_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, size=(5, 4, 3)).astype(float)
        f = tmp_path / "a.ppm"
        write_image(f, img)
        d = read_image(f)
        assert d.image_shape == (5, 4, 3)
        assert np.array_equal(d.x[0], row_from_image(img))

    def test_header_comments(self, tmp_path):
        f = tmp_path / "c.pgm"
        f.write_bytes(b"P5\n# a comment\n2 1 # inline\n255\n" + bytes([9, 10]))
        d = read_image(f)
        assert np.array_equal(d.x[0], [9.0, 10.0])

    def test_ascii_format_rejected(self, tmp_path):
        f = tmp_path / "a.pgm"
        f.write_bytes(b"P2\n2 1\n255\n9 10")
        with pytest.raises(UnsupportedFormat):
            read_image(f)

    def test_wide_maxval_rejected(self, tmp_path):
        f = tmp_path / "a.pgm"
        f.write_bytes(b"P5\n2 1\n65535\n" + bytes(4))
        with pytest.raises(UnsupportedFormat):
            read_image(f)

    def test_truncated_raster(self, tmp_path):
        f = tmp_path / "a.pgm"
        f.write_bytes(b"P5\n2 2\n255\n" + bytes([1, 2]))
        with pytest.raises(CorruptHeader):
            read_image(f)

    def test_bad_values_rejected_on_write(self, tmp_path):
        with pytest.raises(ValueError):
            write_image(tmp_path / "x.pgm", np.array([[0.5]]))
        with pytest.raises(ValueError):
            write_image(tmp_path / "x.pgm", np.array([[-3.0]]))


class TestResize:
    def d(self, img):
        img = np.asarray(img, dtype=float)
        return Dataset(x=img.ravel()[None, :], image_shape=(*img.shape, 1))

    def test_identity_at_same_size(self):
        img = np.arange(12.0).reshape(3, 4)
        out = resize_bilinear(self.d(img), 3, 4)
        assert np.array_equal(out.x[0], img.ravel())

    def test_constant_stays_constant(self):
        out = resize_bilinear(self.d(np.full((2, 3), 7.0)), 5, 6)
        assert np.all(out.x[0] == 7.0)
        assert out.image_shape == (5, 6, 1)

    def test_checkerboard_against_direct_formula(self):
        img = np.array([[0.0, 255.0], [255.0, 0.0]])
        out = resize_bilinear(self.d(img), 4, 4)
        assert np.allclose(out.x[0].reshape(4, 4), bilinear_direct(img, 4, 4), atol=1e-12)

    def test_random_against_direct_formula(self):
        rng = np.random.default_rng(8)
        img = rng.uniform(0, 255, size=(5, 7))
        out = resize_bilinear(self.d(img), 9, 3)
        assert np.allclose(out.x[0].reshape(9, 3), bilinear_direct(img, 9, 3), atol=1e-12)

    def test_not_an_image(self):
        with pytest.raises(NotAnImage):
            resize_bilinear(Dataset(x=np.ones((2, 4))), 2, 2)


class TestSplit:
    def ids(self, n=442):
        return Dataset(x=np.arange(n, dtype=float)[:, None])

    def test_fractional_rounding(self):
        train, test = train_test_split(self.ids(442), SplitSpec(test_size=0.25, seed=0))
        assert test.n == 111 and train.n == 331

    def test_explicit_counts_disjoint(self):
        train, test = train_test_split(self.ids(100), SplitSpec(n_train=50, n_test=10, seed=1))
        assert train.n == 50 and test.n == 10
        assert not set(train.x[:, 0]) & set(test.x[:, 0])

    def test_determinism(self):
        a = train_test_split(self.ids(60), SplitSpec(test_size=0.3, seed=5))
        b = train_test_split(self.ids(60), SplitSpec(test_size=0.3, seed=5))
        assert np.array_equal(a[0].x, b[0].x) and np.array_equal(a[1].x, b[1].x)

    def test_sizes_exceed(self):
        with pytest.raises(SizesExceedData):
            train_test_split(self.ids(10), SplitSpec(n_train=8, n_test=5, seed=0))

    def test_empty_spec_rejected(self):
        with pytest.raises(ValueError):
            train_test_split(self.ids(10), SplitSpec())


class TestStandardizer:
    def test_round_trip_identity(self):
        x = anisotropic_gaussian(50, 4, seed=3) + 100.0
        s = Standardizer.from_data(x)
        assert np.allclose(s.inverse(s.transform(x)), x, atol=1e-12 * 100)

    def test_zero_variance_column(self):
        x = np.column_stack([np.ones(10), np.arange(10.0)])
        s = Standardizer.from_data(x)
        assert s.std[0] == 1.0
        assert np.all(s.transform(x)[:, 0] == 0.0)


def fitted(seed=0, n=60, p=6, trees=10, kind="hhcart"):
    x = anisotropic_gaussian(n, p, seed=seed)
    cfg = ForestConfig(tree_kind=kind, transform="proj", n_estimators=trees,
                       max_depth=3, max_samples=0.6, max_features=0.8, seed=seed)
    return fit(x, cfg), x


class TestModelPersistence:
    def test_save_load_save_byte_identical(self, tmp_path):
        model, _ = fitted()
        f1, f2 = tmp_path / "m1.json", tmp_path / "m2.json"
        save_model(model, f1)
        save_model(load_model(f1), f2)
        assert f1.read_bytes() == f2.read_bytes()

    def test_randcart_rotation_round_trip(self, tmp_path):
        model, x = fitted(kind="randcart")
        f = tmp_path / "m.json"
        save_model(model, f)
        again = load_model(f)
        for a, b in zip(model.trees, again.trees):
            assert np.array_equal(a.rotation, b.rotation)
            assert a.depth == b.depth and a.leaf_count == b.leaf_count

    def test_tampered_leaf_id(self, tmp_path):
        model, _ = fitted()
        f = tmp_path / "m.json"
        save_model(model, f)
        doc = json.loads(f.read_text())
        for node in doc["trees"][0]["nodes"]:
            if node["leaf_id"] is not None:
                node["leaf_id"] = 99
                break
        f.write_text(json.dumps(doc))
        with pytest.raises(SchemaError):
            load_model(f)

    def test_version_mismatch(self, tmp_path):
        model, _ = fitted()
        f = tmp_path / "m.json"
        save_model(model, f)
        doc = json.loads(f.read_text())
        doc["format_version"] = 999
        f.write_text(json.dumps(doc))
        with pytest.raises(VersionMismatch):
            load_model(f)

    def test_behavioral_equivalence_200_trees(self, tmp_path):
        x = anisotropic_gaussian(442, 10, seed=12)
        cfg = ForestConfig(tree_kind="hhcart", transform="proj", n_estimators=200,
                           max_depth=3, max_samples=0.5, max_features=0.75, seed=9)
        model = fit(x, cfg)
        f = tmp_path / "m.json"
        save_model(model, f)
        again = load_model(f)
        probes = x[:10]
        for row in probes:
            assert np.array_equal(encode(model, row).leaves, encode(again, row).leaves)

    def test_standardizer_and_tags_round_trip(self, tmp_path):
        model, x = fitted()
        model.standardizer = Standardizer.from_data(x)
        model.channel_tag = "gray"
        model.image_shape = (2, 3)
        f = tmp_path / "m.json"
        save_model(model, f)
        again = load_model(f)
        assert np.array_equal(again.standardizer.mean, model.standardizer.mean)
        assert again.channel_tag == "gray"
        assert again.image_shape == (2, 3)


class TestCodes:
    def test_round_trip(self, tmp_path):
        codes = np.array([[1, 2, 3], [4, 5, 6]])
        f = tmp_path / "c.csv"
        save_codes(codes, f)
        assert np.array_equal(load_codes(f), codes)

    def test_ragged(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("1,2\n3\n")
        with pytest.raises(RaggedRows):
            load_codes(f)

    def test_non_integer(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("1,x\n")
        with pytest.raises(ParseError):
            load_codes(f)
