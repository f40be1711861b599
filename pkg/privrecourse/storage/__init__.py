"""
Model store implementations.
Caches trained models under content fingerprints, in memory or in an
LZ4-compressed file.
"""

import hashlib
import json
import logging
import os
from typing import List, Optional

import lz4.frame
from sortedcontainers import SortedDict

from ..errors import PipelineError
from ..interfaces import CompressionInterface, FileSystemInterface, StorageInterface
from ..logreg import LinearModel

logger = logging.getLogger(__name__)

STORE_FORMAT = 1


class DefaultFileSystem(FileSystemInterface):
    """Local disk."""

    def load(self, path: str) -> Optional[bytes]:
        if not os.path.isfile(path):
            return None
        with open(path, "rb") as handle:
            return handle.read()

    def save(self, path: str, data: bytes) -> None:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        # per-process name so parallel sweeps never share a temp file
        staging = f"{path}.{os.getpid()}.tmp"
        with open(staging, "wb") as handle:
            handle.write(data)
        os.replace(staging, path)


class LZ4Compression(CompressionInterface):
    """LZ4 frame format; empty input stays empty."""

    def pack(self, data: bytes) -> bytes:
        return lz4.frame.compress(data) if data else b""

    def unpack(self, blob: bytes) -> bytes:
        return lz4.frame.decompress(blob) if blob else b""


class MemoryStorage(StorageInterface):
    """Sorted in-process table."""

    def __init__(self):
        self._entries = SortedDict()

    def put(self, key: str, payload: bytes) -> None:
        self._entries[key] = payload

    def get(self, key: str) -> Optional[bytes]:
        return self._entries.get(key)

    def keys(self) -> List[str]:
        return list(self._entries.keys())

    def flush(self) -> None:
        pass

    def __len__(self) -> int:
        return len(self._entries)


class PersistentStorage(StorageInterface):
    """
    Table mirrored to a single compressed JSON document.

    The document is ``{"format": 1, "entries": {key: payload}}``. It is read
    once on open and rewritten whole on flush when entries were added.
    """

    def __init__(self, file_path: str,
                 filesystem: Optional[FileSystemInterface] = None,
                 compression: Optional[CompressionInterface] = None):
        self.file_path = file_path
        self._fs = filesystem or DefaultFileSystem()
        self._codec = compression or LZ4Compression()
        self._table = MemoryStorage()
        self._pending = 0
        self._read_document()

    def _read_document(self) -> None:
        blob = self._fs.load(self.file_path)
        if not blob:
            return
        try:
            document = json.loads(self._codec.unpack(blob).decode("utf-8"))
            if document.get("format") != STORE_FORMAT:
                raise ValueError(f"unsupported store format {document.get('format')!r}")
            for key, payload in document["entries"].items():
                self._table.put(key, payload.encode("utf-8"))
        except Exception as e:
            raise PipelineError(f"Failed to load model store {self.file_path}: {e}") from e
        logger.debug("Loaded %d entries from %s", len(self._table), self.file_path)

    def put(self, key: str, payload: bytes) -> None:
        self._table.put(key, payload)
        self._pending += 1

    def get(self, key: str) -> Optional[bytes]:
        return self._table.get(key)

    def keys(self) -> List[str]:
        return self._table.keys()

    def flush(self) -> None:
        if not self._pending:
            return
        entries = {key: self._table.get(key).decode("utf-8") for key in self._table.keys()}
        document = json.dumps({"format": STORE_FORMAT, "entries": entries}, sort_keys=True)
        try:
            self._fs.save(self.file_path, self._codec.pack(document.encode("utf-8")))
        except Exception as e:
            raise PipelineError(f"Failed to save model store {self.file_path}: {e}") from e
        logger.debug("Wrote %d entries to %s", len(entries), self.file_path)
        self._pending = 0


def fingerprint(**parts) -> str:
    """sha256 of the canonical JSON encoding of ``parts``."""
    canonical = json.dumps(parts, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def encode_models(models: List[LinearModel]) -> bytes:
    """JSON encoding of a model list; floats keep full round-trip precision."""
    return json.dumps([m.to_dict() for m in models], sort_keys=True).encode('utf-8')


def decode_models(payload: bytes) -> List[LinearModel]:
    return [LinearModel.from_dict(entry) for entry in json.loads(payload.decode('utf-8'))]


class ModelStore:
    """
    Cache of trained model lists keyed by pipeline fingerprint.

    Args:
        file_path: Path to store file (None for in-memory)
        filesystem: Custom filesystem interface
        compression: Custom compression interface
    """

    def __init__(self, file_path: Optional[str] = None,
                 filesystem: Optional[FileSystemInterface] = None,
                 compression: Optional[CompressionInterface] = None):
        if file_path is None:
            self._storage: StorageInterface = MemoryStorage()
        else:
            self._storage = PersistentStorage(file_path, filesystem, compression)
        self._closed = False

    def put_models(self, key: str, models: List[LinearModel]) -> None:
        self._check_not_closed()
        self._storage.put(key, encode_models(models))
        logger.debug("Stored %d models under %s", len(models), key[:12])

    def get_models(self, key: str) -> Optional[List[LinearModel]]:
        self._check_not_closed()
        payload = self._storage.get(key)
        return decode_models(payload) if payload is not None else None

    def contains(self, key: str) -> bool:
        self._check_not_closed()
        return self._storage.get(key) is not None

    def keys(self) -> List[str]:
        self._check_not_closed()
        return self._storage.keys()

    def flush(self) -> None:
        self._check_not_closed()
        self._storage.flush()

    def close(self) -> None:
        if not self._closed:
            self._storage.flush()
            self._closed = True

    def _check_not_closed(self) -> None:
        if self._closed:
            raise PipelineError("Model store is closed")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def __contains__(self, key: str) -> bool:
        return self.contains(key)

    def __len__(self) -> int:
        return len(self.keys())
