import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qentrec.imaging import FormatError, sample_cue_rotations
from qentrec.library import (
    BLOB_NAME,
    MANIFEST_NAME,
    BinningScheme,
    Library,
    UnreachableBinError,
    VersionSkewError,
    bin_label,
    bin_labels,
    build_dissipative_library,
    build_excited_library,
    build_ground_library,
    build_unitary_dynamics_library,
    concatenate,
    dynamics_scheme,
    entropy_scheme,
    read_library,
    write_library,
)
from qentrec.measures import MeasureKind, half_chain_entropy
from qentrec.models import ModelSpec, ground_state

L = 6


@pytest.fixture(scope="module")
def rot():
    return sample_cue_rotations(5, L, 11)


@pytest.fixture(scope="module")
def ground4(rot):
    return build_ground_library("tfi+", entropy_scheme(4), 40, rot, 3)


class TestBinning:
    def test_examples(self):
        s = entropy_scheme(4)
        assert bin_label(0.0, s) == 1
        assert bin_label(0.5, s) == 3
        assert bin_label(math.log(2), s) == 4
        assert abs(s.width - 0.17329) < 1e-5

    def test_above_range(self):
        with pytest.raises(ValueError):
            bin_label(0.7, entropy_scheme(4))
        with pytest.raises(ValueError):
            bin_label(-0.1, entropy_scheme(4))

    def test_scheme_validation(self):
        with pytest.raises(ValueError):
            BinningScheme(MeasureKind.ENTROPY, 0.0, 4)
        with pytest.raises(ValueError):
            BinningScheme(MeasureKind.ENTROPY, 1.0, 1)
        s = dynamics_scheme(MeasureKind.LOG_NEGATIVITY, 8, 10)
        assert s.e_max == 4 and BinningScheme.from_dict(s.to_dict()) == s

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0, 1, allow_nan=False), st.integers(2, 10), st.floats(0.1, 10))
    def test_label_brackets_value(self, frac, n_bins, e_max):
        s = BinningScheme(MeasureKind.ENTROPY, e_max, n_bins)
        v = frac * e_max
        n = bin_label(v, s)
        assert 1 <= n <= n_bins
        assert (n - 1) * s.width <= v * (1 + 1e-12)
        assert v < n * s.width or n == n_bins

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=30))
    def test_monotone(self, vals):
        s = entropy_scheme(7, 1.0)
        vals = sorted(vals)
        labels = bin_labels(vals, s)
        assert np.all(np.diff(labels) >= 0)


class TestGround:
    def test_flat_and_consistent(self, ground4):
        assert len(ground4) == 40
        assert np.array_equal(np.bincount(ground4.bins, minlength=5)[1:], [10] * 4)
        assert np.array_equal(bin_labels(ground4.values, ground4.scheme), ground4.bins)
        assert ground4.meta["scheme"]["e_max"] == pytest.approx(math.log(2))

    def test_labels_recompute(self, ground4):
        for i in range(0, 40, 7):
            item = ground4[i]
            _, psi = ground_state(ModelSpec("tfi+", L, item.provenance["h"]))
            assert abs(half_chain_entropy(psi).value - item.exact_value) < 1e-10
            assert item.provenance["h"] > 1

    def test_rows_normalized(self, ground4):
        assert np.abs(ground4.images.astype(float).sum(axis=2) - 1).max() < 1e-5

    def test_deterministic(self, rot, ground4):
        again = build_ground_library("tfi+", entropy_scheme(4), 40, rot, 3)
        assert np.array_equal(again.images, ground4.images) and np.array_equal(again.values, ground4.values)

    @pytest.mark.parametrize("kind", ["tfi-", "xx"])
    def test_other_models(self, rot, kind):
        lib = build_ground_library(kind, entropy_scheme(2), 6, rot, 1)
        assert np.array_equal(np.bincount(lib.bins, minlength=3)[1:], [3, 3])

    def test_no_recipe(self, rot):
        with pytest.raises(ValueError):
            build_ground_library("ni-tfi+", entropy_scheme(2), 6, rot, 1)
        with pytest.raises(ValueError):
            build_excited_library("xx", entropy_scheme(2), 6, rot, 1)

    def test_unreachable(self, rot):
        with pytest.raises(UnreachableBinError):
            build_ground_library("tfi+", entropy_scheme(4, e_max=3.0), 8, rot, 1)


class TestExcited:
    def test_per_h(self, rot):
        lib = build_excited_library("tfi+", dynamics_scheme(MeasureKind.ENTROPY, L, 10), 35, rot, 2)
        assert len(lib) == 35
        h = np.array(lib.provenance["h"])
        assert np.all((h > 1) & (h < 1.07))
        _, per_h = np.unique(h, return_counts=True)
        assert per_h.max() <= 10

    def test_fixed_fields(self, rot):
        lib = build_excited_library("tfi+", dynamics_scheme(MeasureKind.ENTROPY, L, 4), 100, rot, 2,
                                    h_values=[1.01, 1.02])
        assert len(lib) <= 8


class TestDynamicsLibraries:
    def test_unitary_classes(self, rot):
        lib = build_unitary_dynamics_library(dynamics_scheme(MeasureKind.ENTROPY, L, 10), (6, 6, 6), rot, 4)
        assert lib.class_counts() == {"excited": 6, "ground": 6, "product": 6}
        prod = np.array(lib.provenance["state_class"]) == "product"
        assert np.all(lib.bins[prod] == 1)

    def test_dissipative_classes(self, rot):
        scheme = dynamics_scheme(MeasureKind.LOG_NEGATIVITY, L, 10)
        lib = build_dissipative_library(scheme, (3, 3, 4, 20), rot, 5)
        assert lib.class_counts() == {"dissipated": 20, "excited": 3, "ground": 3, "separable": 4}
        classes = np.array(lib.provenance["state_class"])
        assert np.all(lib.bins[classes == "separable"] == 1)
        assert lib.meta["gamma"] == 0.1
        t = np.array([x for x, c in zip(lib.provenance["t"], classes) if c == "dissipated"])
        assert np.all(t >= 0) and len(set(lib.bins[classes == "dissipated"])) > 3

    def test_wrong_measure(self, rot):
        with pytest.raises(ValueError):
            build_dissipative_library(entropy_scheme(4), (1, 1, 1, 1), rot, 0)
        with pytest.raises(ValueError):
            build_unitary_dynamics_library(dynamics_scheme(MeasureKind.LOG_NEGATIVITY, L, 4), (1, 1, 1), rot, 0)


class TestFiles:
    def test_round_trip(self, tmp_path, ground4):
        big = concatenate([ground4, ground4, ground4])
        lib = big.subset(np.arange(100))
        write_library(lib, tmp_path / "lib")
        back = read_library(tmp_path / "lib")
        assert np.array_equal(back.images, lib.images)
        assert np.array_equal(back.values, lib.values)
        assert np.array_equal(back.bins, lib.bins)
        assert back.scheme == lib.scheme and back.provenance == lib.provenance

    def test_rewrite_identical(self, tmp_path, ground4):
        write_library(ground4, tmp_path / "a")
        write_library(read_library(tmp_path / "a"), tmp_path / "b")
        for name in (MANIFEST_NAME, BLOB_NAME):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_corrupted_byte(self, tmp_path, ground4):
        write_library(ground4, tmp_path / "lib")
        blob = tmp_path / "lib" / BLOB_NAME
        data = bytearray(blob.read_bytes())
        data[100] ^= 1
        blob.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            read_library(tmp_path / "lib")

    def test_truncated(self, tmp_path, ground4):
        write_library(ground4, tmp_path / "lib")
        blob = tmp_path / "lib" / BLOB_NAME
        blob.write_bytes(blob.read_bytes()[:-10])
        with pytest.raises(FormatError):
            read_library(tmp_path / "lib")

    def test_count_mismatch(self, tmp_path, ground4):
        write_library(ground4, tmp_path / "lib")
        man = tmp_path / "lib" / MANIFEST_NAME
        meta = json.loads(man.read_text())
        meta["count"] += 1
        man.write_text(json.dumps(meta))
        with pytest.raises(VersionSkewError):
            read_library(tmp_path / "lib")

    def test_relabel(self, ground4):
        coarse = ground4.relabel(entropy_scheme(2))
        assert np.array_equal(coarse.bins, (ground4.bins + 1) // 2)

    def test_library_validation(self):
        with pytest.raises(ValueError):
            Library(np.zeros((2, 1, 4)), [0.0], [1, 1], entropy_scheme(2))
