import hashlib
import io
import json
import urllib.error
import zipfile

import pytest

from gomkit.datasets import (DatasetManifest, benchmark_totals, default_cache_dir, discover,
                             fetch, load_manifest)
from gomkit.errors import ChecksumError, ConfigError, NetworkError


def make_archive(path):
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("APA/APA_1_01.bvh", "x")
        zf.writestr("APA/APA_3_02.bvh", "x")
        zf.writestr("APA/readme.txt", "x")
    return path


class CountingOpener:
    def __init__(self, mapping):
        self.mapping = mapping
        self.calls = []

    def __call__(self, url):
        self.calls.append(url)
        if url not in self.mapping:
            raise urllib.error.URLError("offline")
        return io.BytesIO(self.mapping[url])


def test_manifest_totals():
    totals = benchmark_totals()
    assert totals["frames"] == 1_634_776
    assert totals["size_bytes_approx"] == pytest.approx(5e9, rel=0.05)
    assert totals["joint_angles"] == 156 and totals["frame_rate_hz"] == 90


def test_known_manifests():
    for name in ("TVA", "TVP", "APA", "ERGD", "SLW", "GLB", "MSC"):
        m = load_manifest(name)
        assert m.record_api and m.name == name
    assert load_manifest("tva").hmm_states == 7
    assert load_manifest("MSC").hmm_states == 8
    with pytest.raises(ConfigError):
        load_manifest("NOPE")


def test_fetch_then_cache_hit(tmp_path):
    archive = make_archive(tmp_path / "apa.zip")
    url = "https://example.org/apa.zip"
    opener = CountingOpener({url: archive.read_bytes()})
    manifest = DatasetManifest("APA", url=url)
    tree = fetch(manifest, tmp_path / "cache", opener)
    assert (tree / "APA" / "APA_1_01.bvh").exists()
    lock = json.loads((tmp_path / "cache" / "checksums.json").read_text())
    digest = hashlib.sha256(archive.read_bytes()).hexdigest()
    assert lock["APA"]["checksum"] == f"sha256:{digest}"
    again = fetch(manifest, tmp_path / "cache", opener)
    assert again == tree and len(opener.calls) == 1


def test_corrupted_cache_is_purged(tmp_path):
    archive = make_archive(tmp_path / "apa.zip")
    url = "https://example.org/apa.zip"
    manifest = DatasetManifest("APA", url=url)
    fetch(manifest, tmp_path / "cache", CountingOpener({url: archive.read_bytes()}))
    cached = tmp_path / "cache" / "APA" / "apa.zip"
    cached.write_bytes(b"garbage")
    with pytest.raises(ChecksumError):
        fetch(manifest, tmp_path / "cache", CountingOpener({}))
    assert not cached.exists()
    assert not (tmp_path / "cache" / "APA" / "data").exists()


def test_download_checksum_mismatch(tmp_path):
    archive = make_archive(tmp_path / "apa.zip")
    url = "https://example.org/apa.zip"
    manifest = DatasetManifest("APA", url=url, checksum="sha256:" + "0" * 64)
    with pytest.raises(ChecksumError):
        fetch(manifest, tmp_path / "cache", CountingOpener({url: archive.read_bytes()}))
    assert not list((tmp_path / "cache" / "APA").glob("*.zip"))


def test_resolves_archive_through_record_api(tmp_path):
    data = make_archive(tmp_path / "apa.zip").read_bytes()
    md5 = hashlib.md5(data).hexdigest()
    record = {"files": [{"key": "TVA.zip", "links": {"self": "https://x/TVA.zip"}},
                        {"key": "APA.zip", "checksum": f"md5:{md5}",
                         "links": {"self": "https://x/APA.zip"}}]}
    opener = CountingOpener({"https://api/rec": json.dumps(record).encode(),
                             "https://x/APA.zip": data})
    manifest = DatasetManifest("APA", record_api="https://api/rec", file_pattern="APA")
    tree = fetch(manifest, tmp_path / "cache", opener)
    assert (tree / "APA" / "APA_3_02.bvh").exists()


def test_network_error(tmp_path):
    with pytest.raises(NetworkError):
        fetch(DatasetManifest("APA", url="https://offline/apa.zip"), tmp_path, CountingOpener({}))


def test_discover_groups_by_class(tmp_path):
    make_archive(tmp_path / "a.zip")
    with zipfile.ZipFile(tmp_path / "a.zip") as zf:
        zf.extractall(tmp_path / "tree")
    groups = discover(tmp_path / "tree", load_manifest("APA"))
    assert groups == {"APA_1": [tmp_path / "tree/APA/APA_1_01.bvh"],
                      "APA_3": [tmp_path / "tree/APA/APA_3_02.bvh"]}
    assert list(discover(tmp_path / "tree", gestures=["APA_3"])) == ["APA_3"]


def test_cache_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv("GOMKIT_CACHE", str(tmp_path))
    assert default_cache_dir() == tmp_path
