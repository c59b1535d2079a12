import gzip
import struct

import numpy as np
import pytest

from gradkernel.data import (
    BadMagicError,
    CountMismatchError,
    Dataset,
    InsufficientExamplesError,
    TruncatedFileError,
    balanced_split,
    load_idx,
    make_binary_task,
    select_basis,
    standardize,
    synth_blobs,
)


def idx_images(pixels, rows, cols, magic=0x803):
    pixels = bytes(pixels)
    count = len(pixels) // (rows * cols)
    return struct.pack(">IIII", magic, count, rows, cols) + pixels


def idx_labels(labels, magic=0x801):
    return struct.pack(">II", magic, len(labels)) + bytes(labels)


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_bytes(payload)
    return path


def test_load_two_images(tmp_path):
    # two 2x2 images, bytes written row-major
    img = b"\x00\x00\x08\x03" + b"\x00\x00\x00\x02" + b"\x00\x00\x00\x02" + b"\x00\x00\x00\x02"
    img += bytes([0, 51, 102, 255, 255, 0, 17, 34])
    lab = b"\x00\x00\x08\x01" + b"\x00\x00\x00\x02" + bytes([7, 1])
    X, y = load_idx(write(tmp_path, "i", img), write(tmp_path, "l", lab))
    np.testing.assert_array_equal(X, [[0, 0.2, 0.4, 1.0], [1.0, 0, 17 / 255, 34 / 255]])
    np.testing.assert_array_equal(y, [7, 1])


def test_load_gzip(tmp_path):
    img = idx_images(range(12), 2, 3)
    lab = idx_labels([3, 4])
    X, y = load_idx(write(tmp_path, "i.gz", gzip.compress(img)), write(tmp_path, "l.gz", gzip.compress(lab)))
    assert X.shape == (2, 6)
    assert X[1, 5] == 11 / 255
    np.testing.assert_array_equal(y, [3, 4])


def test_labels_with_image_magic(tmp_path):
    img = write(tmp_path, "i", idx_images([0] * 4, 2, 2))
    lab = write(tmp_path, "l", idx_labels([1], magic=0x803))
    with pytest.raises(BadMagicError, match="byte offset 0"):
        load_idx(img, lab)


def test_images_bad_magic(tmp_path):
    img = write(tmp_path, "i", idx_images([0] * 4, 2, 2, magic=0x801))
    lab = write(tmp_path, "l", idx_labels([1]))
    with pytest.raises(BadMagicError):
        load_idx(img, lab)


def test_count_mismatch(tmp_path):
    img = write(tmp_path, "i", idx_images([0] * 12, 2, 2))
    lab = write(tmp_path, "l", idx_labels([1, 2]))
    with pytest.raises(CountMismatchError, match="3"):
        load_idx(img, lab)


def test_truncated(tmp_path):
    full = idx_images([5] * 8, 2, 2)
    lab = write(tmp_path, "l", idx_labels([1, 2]))
    with pytest.raises(TruncatedFileError, match="byte offset 22"):
        load_idx(write(tmp_path, "i", full[:-2]), lab)
    with pytest.raises(TruncatedFileError):
        load_idx(write(tmp_path, "i2", full[:10]), lab)
    with pytest.raises(TruncatedFileError):
        load_idx(write(tmp_path, "i3", full), write(tmp_path, "l2", idx_labels([1, 2])[:-1]))


def digits(gen, n=2400):
    labels = np.arange(n) % 10
    return gen.uniform(0, 1, (n, 6)), labels


def test_binary_task_paper_sizes(gen):
    images, labels = digits(gen)
    ds, plan = make_binary_task(images, labels, 1, 7, 100, 100, seed=3)
    assert ds.source == "idx"
    assert ds.class_names == ("7", "1")
    assert len(ds) == 480
    assert len(plan.train_indices) == 200 and len(plan.test_indices) == 200
    assert np.sum(ds.labels[plan.train_indices]) == 100
    assert np.sum(ds.labels[plan.test_indices]) == 100
    assert not set(plan.train_indices) & set(plan.test_indices)


def test_binary_task_full_protocol_counts(gen):
    images, labels = digits(gen, n=12000)
    ds, plan = make_binary_task(images, labels, 1, 7, 500, 500, seed=0)
    for idx in (plan.train_indices, plan.test_indices):
        assert len(idx) == 1000
        assert np.sum(ds.labels[idx] == 1) == 500
    basis = select_basis(plan, ds.labels, 50, seed=0)
    assert len(basis) == 100 and np.sum(ds.labels[basis] == 1) == 50
    assert set(basis) <= set(plan.train_indices)


def test_binary_task_tiny_and_deterministic(gen):
    images, labels = digits(gen, n=40)
    ds, plan = make_binary_task(images, labels, 1, 7, 1, 1, seed=9)
    assert len(set(plan.train_indices) | set(plan.test_indices)) == 4
    _, again = make_binary_task(images, labels, 1, 7, 1, 1, seed=9)
    np.testing.assert_array_equal(plan.train_indices, again.train_indices)
    np.testing.assert_array_equal(plan.test_indices, again.test_indices)


def test_binary_task_insufficient(gen):
    images, labels = digits(gen, n=40)
    with pytest.raises(InsufficientExamplesError):
        make_binary_task(images, labels, 1, 7, 3, 2, seed=0)


def test_select_basis(gen):
    labels = np.repeat([1, 0], 30)
    plan = balanced_split(labels, 20, 10, seed=1)
    b = select_basis(plan, labels, 5, seed=2)
    assert len(b) == 10 and np.sum(labels[b]) == 5
    assert set(b) <= set(plan.train_indices)
    np.testing.assert_array_equal(b, select_basis(plan, labels, 5, seed=2))
    full = select_basis(plan, labels, 20, seed=2)
    assert set(full) == set(plan.train_indices)
    with pytest.raises(InsufficientExamplesError):
        select_basis(plan, labels, 21, seed=2)


def test_synth_blobs_degenerate():
    ds = synth_blobs(5, 3, 0.0, 0.0, seed=1)
    assert np.all(ds.examples == 0.0)
    assert list(ds.labels).count(1) == 5


def test_synth_blobs_separable_midpoint():
    ds = synth_blobs(50, 2, 10.0, 0.1, seed=4)
    u = np.ones(2) / np.sqrt(2)
    proj = ds.examples @ u
    # centers at +/-5 along u, midpoint threshold at 0
    assert np.all((proj > 0) == (ds.labels == 1))
    again = synth_blobs(50, 2, 10.0, 0.1, seed=4)
    assert ds.examples.tobytes() == again.examples.tobytes()
    with pytest.raises(ValueError):
        synth_blobs(0, 2, 1.0, 0.1, seed=0)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), [0, 1])
    ds = Dataset(np.arange(6.0).reshape(3, 2), [0, 1, 1])
    sub = ds.subset([2, 0])
    np.testing.assert_array_equal(sub.examples, [[4, 5], [0, 1]])


def test_standardize():
    np.testing.assert_allclose(standardize([[0.5, 1.0]], 0.5, 0.25), [[0.0, 2.0]])
