import numpy as np
import pytest

from dataset.csv_corpus import load_csv_corpus, read_csv_samples, read_manifest, write_csv_corpus
from modules.errors import CorpusParseError, DatasetError


def write(path, text):
    path.write_text(text, encoding='utf-8')
    return path


def test_three_rows_give_three_samples(tmp_path):
    csv = write(tmp_path / 'a.csv', "0,1.0,2.0,3.0\n0.01,4.0,5.0,6.0\n0.02,7.0,8.0,9.0\n")
    samples = read_csv_samples(csv)
    assert samples.shape == (3, 3)
    np.testing.assert_array_equal(samples[:, 0], [1.0, 4.0, 7.0])


def test_header_row_is_skipped(tmp_path):
    csv = write(tmp_path / 'a.csv', "timestamp,ch_0\n0,1.5\n0.01,2.5\n")
    np.testing.assert_array_equal(read_csv_samples(csv), [[1.5], [2.5]])


@pytest.mark.parametrize("text, line", [
    ("timestamp,ch_0\n0,1\n0.01,nan\n", 3),
    ("0,1\n0.01,walking\n", 2),
])
def test_bad_values_report_their_line(tmp_path, text, line):
    with pytest.raises(CorpusParseError) as excinfo:
        read_csv_samples(write(tmp_path / 'bad.csv', text))
    assert excinfo.value.line == line
    assert f"bad.csv:{line}" in str(excinfo.value)


def test_timestamp_only_file_is_rejected(tmp_path):
    with pytest.raises(CorpusParseError):
        read_csv_samples(write(tmp_path / 'a.csv', "0\n1\n"))


def test_manifest_entries(tmp_path):
    write(tmp_path / 'a.csv', "0,1\n")
    manifest = write(tmp_path / 'manifest.tsv', "# comment\n\na.csv\tsubj1\twalk\t100\n")
    entries = read_manifest(manifest, class_names=['stay', 'walk'])
    assert len(entries) == 1
    assert entries[0].label == 1 and entries[0].subject_id == 'subj1'
    assert entries[0].path == tmp_path / 'a.csv' and entries[0].line == 3


def test_missing_recording_files(tmp_path):
    manifest = write(tmp_path / 'manifest.tsv', "gone.csv\tsubj1\t0\t100\n")
    with pytest.raises(DatasetError, match="missing"):
        read_manifest(manifest, num_classes=2)
    with pytest.raises(DatasetError):
        read_manifest(tmp_path / 'nowhere.tsv')


@pytest.mark.parametrize("line", [
    "a.csv\tsubj1\t0\n",
    "a.csv\tsubj1\t5\t100\n",
    "a.csv\tsubj1\t0\tfast\n",
    "a.csv\tsubj1\t0\t-100\n",
])
def test_malformed_manifest_lines(tmp_path, line):
    write(tmp_path / 'a.csv', "0,1\n")
    with pytest.raises(CorpusParseError):
        read_manifest(write(tmp_path / 'manifest.tsv', line), num_classes=3)


def test_written_corpus_loads_back(tmp_path, tiny_corpus):
    manifest = write_csv_corpus(tiny_corpus, tmp_path)
    loaded = load_csv_corpus(manifest, num_classes=3)
    assert len(loaded) == len(tiny_corpus)
    for original, restored in zip(tiny_corpus, loaded):
        assert (restored.subject_id, restored.label, restored.name) == \
            (original.subject_id, original.label, original.name)
        assert restored.sample_rate_hz == original.sample_rate_hz
        np.testing.assert_array_equal(restored.samples, original.samples)


def test_seventeen_digit_values_parse_exactly(tmp_path):
    rng = np.random.default_rng(5)
    values = rng.standard_normal((400, 2)) * 10.0 ** rng.integers(-12, 12, size=(400, 2))
    rows = "".join(f"{i},{a:.17g},{b:.17g}\n" for i, (a, b) in enumerate(values))
    np.testing.assert_array_equal(read_csv_samples(write(tmp_path / 'a.csv', rows)), values)
