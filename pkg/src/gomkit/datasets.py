"""Benchmark dataset manifest, download cache and file discovery."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import shutil
import tarfile
import tempfile
import urllib.error
import urllib.request
import zipfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ChecksumError, ConfigError, NetworkError

log = logging.getLogger(__name__)

CACHE_ENV = "GOMKIT_CACHE"
CHECKSUM_FILE = "checksums.json"
DEFAULT_CLASS_PATTERN = r"(?P<label>[A-Za-z]+)[_-]?(?P<index>\d+)"


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    url: str | None = None
    checksum: str | None = None
    class_pattern: str = DEFAULT_CLASS_PATTERN
    file_pattern: str | None = None
    vocabulary: tuple = ()
    min_repetitions: int = 2
    hmm_states: int = 7
    record_api: str | None = None
    class_map: dict = field(default_factory=dict)

    def label_for(self, path) -> str | None:
        """Gesture class of a file, from ``class_map`` first, then the pattern."""
        stem = Path(path).stem
        if stem in self.class_map:
            return self.class_map[stem]
        m = re.search(self.class_pattern, stem)
        if not m:
            return None
        groups = m.groupdict()
        if "label" in groups and "index" in groups:
            return f"{groups['label'].upper()}_{int(groups['index'])}"
        return m.group(0)


def load_manifest(name: str, path=None) -> DatasetManifest:
    if path is None:
        doc = json.loads(resources.files("gomkit").joinpath("data/manifest.json").read_text())
    else:
        doc = json.loads(Path(path).read_text())
    entry = doc["datasets"].get(name.upper())
    if entry is None:
        raise ConfigError(f"unknown dataset {name!r}; known: {sorted(doc['datasets'])}")
    return DatasetManifest(
        name=name.upper(),
        url=entry.get("url"),
        checksum=entry.get("checksum") or doc.get("checksums", {}).get(name.upper()),
        class_pattern=entry.get("class_pattern", DEFAULT_CLASS_PATTERN),
        file_pattern=entry.get("file_pattern"),
        vocabulary=tuple(entry.get("vocabulary", ())),
        min_repetitions=int(entry.get("min_repetitions", 2)),
        hmm_states=int(entry.get("hmm_states", 7)),
        record_api=doc.get("record_api"),
        class_map=dict(entry.get("class_map", {})),
    )


def benchmark_totals() -> dict:
    doc = json.loads(resources.files("gomkit").joinpath("data/manifest.json").read_text())
    return dict(doc["benchmark_totals"])


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "gomkit"))


# --------------------------------------------------------------------------
# download

def _digest(path, algo: str) -> str:
    h = hashlib.new(algo)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _split_checksum(value: str):
    algo, sep, digest = value.partition(":")
    return (algo, digest) if sep else ("sha256", value)


def _verify(path, checksum: str) -> bool:
    algo, digest = _split_checksum(checksum)
    return _digest(path, algo) == digest.lower()


def _open(url, opener):
    try:
        return opener(url)
    except (urllib.error.URLError, OSError) as exc:
        raise NetworkError(f"cannot reach {url}: {exc}") from exc


def _resolve_remote(manifest: DatasetManifest, opener):
    """Archive URL and remote checksum, looked up in the Zenodo record if needed."""
    if manifest.url:
        return manifest.url, None, Path(manifest.url.split("?")[0]).name
    if not manifest.record_api:
        raise ConfigError(f"dataset {manifest.name} has neither a URL nor a record API")
    with _open(manifest.record_api, opener) as resp:
        record = json.loads(resp.read().decode("utf-8"))
    key = (manifest.file_pattern or manifest.name).lower()
    for f in record.get("files", []):
        fname = f.get("key") or f.get("filename", "")
        if key in fname.lower():
            link = f.get("links", {}).get("self") or f.get("links", {}).get("download")
            return link, f.get("checksum"), fname
    raise NetworkError(f"record lists no file matching {key!r}")


def _purge(*paths):
    for p in paths:
        p = Path(p)
        if p.is_dir():
            shutil.rmtree(p, ignore_errors=True)
        elif p.exists():
            p.unlink()


def _extract(archive: Path, dest: Path):
    tmp = Path(tempfile.mkdtemp(prefix=".extract-", dir=dest.parent))
    try:
        if zipfile.is_zipfile(archive):
            with zipfile.ZipFile(archive) as zf:
                zf.extractall(tmp)
        elif tarfile.is_tarfile(archive):
            with tarfile.open(archive) as tf:
                tf.extractall(tmp, filter="data")
        else:
            shutil.copy2(archive, tmp / archive.name)
        _purge(dest)
        os.replace(tmp, dest)
    except BaseException:
        _purge(tmp)
        raise


def fetch(manifest: DatasetManifest, cache_dir=None, opener=urllib.request.urlopen) -> Path:
    """Download and unpack a dataset into the cache; return the file tree.

    Idempotent: a cached archive whose checksum verifies is reused without
    touching the network. A cached archive that fails verification is
    purged and ChecksumError raised. Checksums not listed in the manifest
    are recorded in ``<cache>/checksums.json`` on the first verified fetch.
    """
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    root = cache / manifest.name
    root.mkdir(parents=True, exist_ok=True)
    lock_path = cache / CHECKSUM_FILE
    recorded = json.loads(lock_path.read_text()) if lock_path.exists() else {}
    tree = root / "data"

    expected = manifest.checksum or recorded.get(manifest.name, {}).get("checksum")
    archive_name = recorded.get(manifest.name, {}).get("archive")
    if archive_name and (root / archive_name).exists():
        archive = root / archive_name
        if expected and not _verify(archive, expected):
            _purge(archive, tree)
            raise ChecksumError(f"cached archive {archive} failed verification and was removed")
        if not tree.exists():
            _extract(archive, tree)
        return tree

    url, remote_sum, fname = _resolve_remote(manifest, opener)
    archive = root / fname
    fd, tmp = tempfile.mkstemp(prefix=".dl-", dir=root)
    try:
        with os.fdopen(fd, "wb") as out, _open(url, opener) as resp:
            shutil.copyfileobj(resp, out, 1 << 20)
        check = expected or remote_sum
        if check and not _verify(tmp, check):
            raise ChecksumError(f"download of {url} does not match checksum {check}")
        os.replace(tmp, archive)
    except BaseException:
        _purge(tmp)
        raise
    checksum = expected or f"sha256:{_digest(archive, 'sha256')}"
    recorded[manifest.name] = {"archive": fname, "checksum": checksum, "url": url}
    lock_path.write_text(json.dumps(recorded, indent=2, sort_keys=True) + "\n")
    _extract(archive, tree)
    return tree


# --------------------------------------------------------------------------
# discovery

def discover(root, manifest: DatasetManifest | None = None, gestures=None) -> dict:
    """Map gesture label -> sorted list of BVH paths found under ``root``."""
    manifest = manifest or DatasetManifest("ANY")
    out: dict = {}
    for path in sorted(Path(root).rglob("*")):
        if path.suffix.lower() != ".bvh":
            continue
        if manifest.file_pattern and manifest.file_pattern.lower() not in str(path).lower():
            continue
        label = manifest.label_for(path)
        if label is None or (gestures and label not in gestures):
            continue
        out.setdefault(label, []).append(path)
    return dict(sorted(out.items()))
