import pytest

from jafar.models.error_model import TruncatedFile
from jafar.storage.binary import ByteReader, atomic_writer, write_text_atomic


def test_failed_write_leaves_nothing_behind(tmp_path):
    target = tmp_path / "out.bin"

    with pytest.raises(RuntimeError), atomic_writer(target) as handle:
        handle.write(b"partial")
        raise RuntimeError("boom")

    assert list(tmp_path.iterdir()) == []


def test_failed_write_keeps_the_previous_file(tmp_path):
    target = tmp_path / "out.txt"
    write_text_atomic(target, "old")

    with pytest.raises(RuntimeError), atomic_writer(target) as handle:
        handle.write(b"new")
        raise RuntimeError("boom")

    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


def test_reader_reports_truncation():
    reader = ByteReader(b"\x01\x00\x02", "<test>")

    assert reader.u16() == 1
    assert reader.remaining == 1

    with pytest.raises(TruncatedFile, match="offset 2"):
        reader.u32()
