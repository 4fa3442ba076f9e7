"""Manifest-driven labeled image datasets.

A manifest is a UTF-8 CSV file. With a header row the columns are
``id,path,label`` (``id`` optional, any order); without one each row is
``path,label``. Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Union

from solarbench.errors import ImageDecodeError, ManifestError
from solarbench.image import Image, load_image


class Sample(NamedTuple):
    """One labeled item. ``image`` may be a zero-argument loader for lazy decoding."""

    sample_id: str
    image: Union[Image, Callable[[], Image]]
    label: int


def resolve_image(image) -> Image:
    return image if isinstance(image, Image) else image()


@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    path: Path
    label: int


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    class_count: int
    content_hash: str
    source: str = ""

    def __len__(self):
        return len(self.entries)


def _parse_label(raw: str, lineno: int) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ManifestError(f"line {lineno}: label {raw!r} is not an integer") from None


def load_manifest(path, class_count: int | None = None) -> Manifest:
    """Parse a manifest CSV.

    When ``class_count`` is omitted it is inferred as ``max(label) + 1``.
    Image files are not touched here; missing files surface at iteration.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ManifestError(f"{path}: cannot read manifest: {exc.strerror or exc}") from exc
    content_hash = hashlib.sha256(raw).hexdigest()
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ManifestError(f"{path}: manifest is not valid UTF-8") from exc

    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise ManifestError(f"{path}: manifest is empty")

    first = [c.strip().lower() for c in rows[0][1]]
    if "path" in first and "label" in first:
        cols = {name: first.index(name) for name in ("id", "path", "label") if name in first}
        rows = rows[1:]
    else:
        cols = {"path": 0, "label": 1}
    width = max(cols.values()) + 1

    base = path.parent
    entries = []
    seen = set()
    for lineno, row in rows:
        if len(row) < width:
            raise ManifestError(f"{path}: line {lineno}: expected at least {width} columns, got {len(row)}")
        rel = row[cols["path"]].strip()
        if not rel:
            raise ManifestError(f"{path}: line {lineno}: empty path")
        sample_id = row[cols["id"]].strip() if "id" in cols else ""
        sample_id = sample_id or rel
        if sample_id in seen:
            raise ManifestError(f"{path}: line {lineno}: duplicate sample id {sample_id!r}")
        seen.add(sample_id)
        label = _parse_label(row[cols["label"]], lineno)
        entries.append(ManifestEntry(sample_id, base / rel, label))

    if not entries:
        raise ManifestError(f"{path}: manifest has a header but no entries")

    labels = [e.label for e in entries]
    if class_count is None:
        class_count = max(max(labels) + 1, 2)
    for e in entries:
        if not 0 <= e.label < class_count:
            raise ManifestError(
                f"{path}: sample {e.sample_id!r}: label {e.label} outside [0, {class_count})"
            )
    return Manifest(tuple(entries), class_count, content_hash, str(path))


def load_entry(entry: ManifestEntry) -> Image:
    try:
        return load_image(entry.path)
    except ImageDecodeError as exc:
        err = type(exc)(f"sample {entry.sample_id!r}: {exc}")
        err.path = exc.path
        err.sample_id = entry.sample_id
        raise err from exc


def iter_samples(manifest: Manifest) -> Iterator[Sample]:
    """Decode and yield every entry in manifest order."""
    for e in manifest.entries:
        yield Sample(e.sample_id, load_entry(e), e.label)


def lazy_samples(manifest: Manifest) -> list[Sample]:
    """Like :func:`iter_samples` but defers decoding to whoever consumes the sample."""
    return [Sample(e.sample_id, functools.partial(load_entry, e), e.label) for e in manifest.entries]


def load_class_names(path) -> dict[int, str]:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return {int(k): str(v) for k, v in d.items()}
    except (OSError, json.JSONDecodeError, AttributeError, ValueError) as exc:
        raise ManifestError(f"{path}: cannot read class-name map: {exc}") from exc
