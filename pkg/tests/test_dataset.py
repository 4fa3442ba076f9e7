import numpy as np
import pytest

from _support import png_bytes, write_uniform_png
from solarbench import ImageDecodeError, ManifestError, iter_samples, load_manifest
from solarbench.dataset import lazy_samples, load_class_names, resolve_image


def test_headerless(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("img1.png,0\nimg2.png,1\n")
    man = load_manifest(m, class_count=2)
    assert [e.sample_id for e in man.entries] == ["img1.png", "img2.png"]
    assert {e.label for e in man.entries} == {0, 1}
    assert man.entries[0].path == tmp_path / "img1.png"


def test_header_with_ids_any_order(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("label,path,id\n3,a.png,first\n1,b.png,second\n")
    man = load_manifest(m)
    assert [(e.sample_id, e.label) for e in man.entries] == [("first", 3), ("second", 1)]
    assert man.class_count == 4


def test_header_without_id(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("path,label\na.png,0\n")
    assert load_manifest(m).entries[0].sample_id == "a.png"


def test_duplicate_path_without_id(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("a.png,0\na.png,1\n")
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(m)


@pytest.mark.parametrize("text", ["", "\n\n", "id,path,label\n"])
def test_empty(tmp_path, text):
    m = tmp_path / "m.csv"
    m.write_text(text)
    with pytest.raises(ManifestError, match="empty|no entries"):
        load_manifest(m)


def test_label_out_of_range(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("a.png,2\n")
    with pytest.raises(ManifestError, match="outside"):
        load_manifest(m, class_count=2)


def test_label_not_integer(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("a.png,cat\n")
    with pytest.raises(ManifestError):
        load_manifest(m)


def test_missing_files_not_checked_at_load(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("nowhere.png,0\n")
    assert len(load_manifest(m)) == 1


def test_hash_sensitivity(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("a.png,0\nb.png,1\n")
    h1 = load_manifest(m).content_hash
    m.write_text("a.png,0\nb.png,1\n\n")
    h2 = load_manifest(m).content_hash
    m.write_text("a.png,0\nb.png,1\n")
    assert h1 != h2
    assert load_manifest(m).content_hash == h1


def test_iter_in_order(tmp_path):
    for i, v in enumerate([0, 128, 255]):
        write_uniform_png(tmp_path / f"{i}.png", v, size=2)
    (tmp_path / "m.csv").write_text("id,path,label\nc,2.png,1\na,0.png,0\nb,1.png,1\n")
    man = load_manifest(tmp_path / "m.csv")
    items = list(iter_samples(man))
    assert [s.sample_id for s in items] == ["c", "a", "b"]
    assert items[0].image.data[0] == 1.0
    assert [s.sample_id for s in iter_samples(man)] == ["c", "a", "b"]


def test_single_white_pixel(tmp_path):
    (tmp_path / "w.png").write_bytes(png_bytes(np.full((1, 1, 3), 255)))
    (tmp_path / "m.csv").write_text("id,path,label\nid,w.png,0\n")
    (sample,) = iter_samples(load_manifest(tmp_path / "m.csv"))
    assert sample.sample_id == "id"
    assert sample.image.data.tolist() == [1.0, 1.0, 1.0]
    assert sample.label == 0


def test_missing_file_raised_after_preceding(tmp_path):
    write_uniform_png(tmp_path / "ok.png", 10)
    (tmp_path / "m.csv").write_text("id,path,label\ngood,ok.png,0\ngone,missing.png,1\n")
    it = iter_samples(load_manifest(tmp_path / "m.csv"))
    assert next(it).sample_id == "good"
    with pytest.raises(ImageDecodeError, match="gone") as info:
        next(it)
    assert "missing.png" in str(info.value)


def test_lazy_samples_decode_on_demand(tmp_path):
    (tmp_path / "m.csv").write_text("id,path,label\nx,missing.png,0\n")
    (s,) = lazy_samples(load_manifest(tmp_path / "m.csv"))
    with pytest.raises(ImageDecodeError, match="'x'"):
        resolve_image(s.image)


def test_class_names(tmp_path):
    p = tmp_path / "names.json"
    p.write_text('{"0": "tench", "1": "goldfish"}')
    assert load_class_names(p) == {0: "tench", 1: "goldfish"}
    p.write_text("[1, 2]")
    with pytest.raises(ManifestError):
        load_class_names(p)
