import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roundtrips import checkpoint_bytes, corpus_bytes, matrix_bytes, report_bytes
from tabinhibit import persist
from tabinhibit.cooccurrence import CooccurrenceMatrix
from tabinhibit.heatmap import decode_ppm, encode_ppm, export_heatmap, render
from tabinhibit.inhibition import InhibitionMatrix


@pytest.mark.parametrize("suffix", [".txt", ".bin"])
def test_matrices_round_trip_bit_identically(tmp_path, suffix):
    for first, second in matrix_bytes(tmp_path, suffix):
        assert first == second


def test_text_and_binary_load_to_the_same_values(tmp_path):
    matrix_bytes(tmp_path, ".txt")
    matrix_bytes(tmp_path, ".bin")
    a, b = CooccurrenceMatrix.load(tmp_path / "m1.txt"), CooccurrenceMatrix.load(tmp_path / "m1.bin")
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.valid_track_counts, b.valid_track_counts)
    assert a.config == b.config and a.track_count == b.track_count


def test_corpus_round_trip(tmp_path):
    first, second = corpus_bytes(tmp_path)
    assert first == second
    assert "corpus.json" in first


def test_checkpoint_round_trip(tmp_path):
    first, second = checkpoint_bytes(tmp_path)
    assert first == second


def test_report_round_trip(tmp_path):
    first, second = report_bytes(tmp_path)
    assert first == second


def test_loading_the_wrong_kind_is_rejected(tmp_path):
    matrix_bytes(tmp_path, ".txt")
    with pytest.raises(persist.FormatError):
        InhibitionMatrix.load(tmp_path / "m1.txt")


def test_truncated_binary_is_rejected(tmp_path):
    matrix_bytes(tmp_path, ".bin")
    blob = (tmp_path / "m1.bin").read_bytes()
    (tmp_path / "cut.bin").write_bytes(blob[:-8])
    with pytest.raises(persist.FormatError):
        CooccurrenceMatrix.load(tmp_path / "cut.bin")


def test_garbage_text_is_rejected():
    with pytest.raises(persist.FormatError):
        persist.loads_text("hello\nworld\n")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=30))
def test_text_floats_survive_exactly(values):
    arr = np.array(values)[None, :]
    text = persist.dumps_text({"k": 1}, {"a": arr, "n": np.arange(3)[:, None]})
    header, arrays = persist.loads_text(text)
    assert header == {"k": 1}
    assert np.array_equal(arrays["a"], arr) and arrays["n"].tolist() == [[0], [1], [2]]
    assert persist.dumps_text(header, arrays) == text


def test_text_rejects_non_matrix_arrays():
    with pytest.raises(ValueError):
        persist.dumps_text({}, {"a": np.arange(3.0)})


def test_ppm_encode_decode():
    img = render(np.linspace(0, 1, 16).reshape(4, 4), block_size=2, scale=3)
    assert img.shape == (12, 12, 3)
    assert np.array_equal(decode_ppm(encode_ppm(img)), img)


def test_ppm_grid_lines_are_white():
    img = render(np.zeros((4, 4)), block_size=2, scale=3)
    assert (img[6, :] == 255).all() and (img[:, 6] == 255).all()
    assert not (img[1, 1] == 255).all()


def test_ppm_pixel_bytes_that_look_like_whitespace_survive():
    img = np.full((2, 2, 3), 10, dtype=np.uint8)  # 10 is the newline byte
    assert np.array_equal(decode_ppm(encode_ppm(img)), img)


def test_export_heatmap_writes_ppm(tmp_path):
    export_heatmap(np.eye(6), tmp_path / "h.ppm", block_size=3, scale=2)
    assert (tmp_path / "h.ppm").read_bytes().startswith(b"P6\n12 12\n255\n")
