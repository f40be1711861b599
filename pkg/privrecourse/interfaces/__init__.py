"""
Abstract interfaces for privrecourse components.
Pluggable pieces of the model store (byte files, compression codec, keyed
payload table) and the recourse mechanisms.
"""

from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np


class FileSystemInterface(ABC):
    """Whole-file byte access used by the persistent model store."""

    @abstractmethod
    def load(self, path: str) -> Optional[bytes]:
        """File contents, or None when there is no file at ``path``."""

    @abstractmethod
    def save(self, path: str, data: bytes) -> None:
        """Replace the file at ``path`` atomically, creating parent directories."""


class CompressionInterface(ABC):
    """Codec applied to the whole store document."""

    @abstractmethod
    def pack(self, data: bytes) -> bytes:
        pass

    @abstractmethod
    def unpack(self, blob: bytes) -> bytes:
        pass


class StorageInterface(ABC):
    """Fingerprint-keyed table of encoded model lists."""

    @abstractmethod
    def put(self, key: str, payload: bytes) -> None:
        pass

    @abstractmethod
    def get(self, key: str) -> Optional[bytes]:
        pass

    @abstractmethod
    def keys(self) -> List[str]:
        """Keys in ascending order."""

    @abstractmethod
    def flush(self) -> None:
        """Write pending entries to the backing medium, if any."""


class RecourseMechanism(ABC):
    """
    A way of answering recourse queries against a trained linear model.

    Mechanisms only ever see the model, never its training data.
    """

    @abstractmethod
    def costs(self, model, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Recourse cost c(x, x') for every row of X."""
        pass

    @abstractmethod
    def outcome(self, model, x: np.ndarray, rng: np.random.Generator):
        """Full recourse outcome for a single point."""
        pass
