"""Manifold projection operators.

A projector maps an arbitrary real vector to a point of the prior
manifold, re-projected onto the probability simplex so the result is
always a valid measure mass vector.  Three kinds are provided: identity
(no prior), sparse coding over a learned dictionary, and an external
process speaking the OTPROJ01 wire protocol.

Wire protocol (binary, over the child's standard input/output):
    request:  8-byte magic ``OTPROJ01``, u32 little-endian n, then
              n float64 little-endian values
    response: u32 little-endian n (must match), then n float64
              little-endian values
One request-response pair per projection; the process stays alive across
calls and terminates on EOF.
"""

from __future__ import annotations

import abc
import os
import select
import shlex
import struct
import subprocess
import threading
import time

import numpy as np

from .errors import ProcessUnavailable, ProtocolViolation, Timeout
from .sparse import (
    DEFAULT_MMSE_PASSES,
    DEFAULT_NOISE_SCALE,
    Dictionary,
    project_sparse,
)

PROTOCOL_MAGIC = b"OTPROJ01"
DEFAULT_TIMEOUT = 30.0


def resimplex(v: np.ndarray) -> np.ndarray:
    """Floor at zero and renormalize to sum 1; flat fallback if empty."""
    v = np.maximum(np.asarray(v, dtype=np.float64).ravel(), 0.0)
    total = v.sum()
    if total <= 0.0:
        return np.full(v.size, 1.0 / v.size)
    return v / total


class Projector(abc.ABC):
    """Projection onto the prior manifold; output is a simplex vector."""

    kind: str

    @abc.abstractmethod
    def project(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def residual(self, y: np.ndarray) -> float:
        """L2 distance between ``y`` and its projection."""
        y = np.asarray(y, dtype=np.float64).ravel()
        return float(np.linalg.norm(y - self.project(y)))


class IdentityProjector(Projector):
    """No prior: projection is simplex re-projection only."""

    kind = "identity"

    def project(self, y: np.ndarray) -> np.ndarray:
        return resimplex(y)


class SparseProjector(Projector):
    """Sparse-coding prior over a fixed dictionary.

    Pure given its construction parameters: repeated calls with the same
    input are bit-identical (the noise seed does not advance).
    """

    kind = "sparse"

    def __init__(
        self,
        dictionary: Dictionary,
        k: int,
        mmse_passes: int = DEFAULT_MMSE_PASSES,
        noise_sigma: float | None = None,
        seed: int = 0,
    ):
        self.dictionary = dictionary
        self.k = k
        self.mmse_passes = mmse_passes
        self.noise_sigma = noise_sigma
        self.seed = seed

    def project(self, y: np.ndarray) -> np.ndarray:
        return project_sparse(
            y,
            self.dictionary,
            self.k,
            mmse_passes=self.mmse_passes,
            noise_sigma=self.noise_sigma,
            seed=self.seed,
        )


class ExternalProjector(Projector):
    """Projection delegated to a child process via the OTPROJ01 protocol.

    The process is spawned on first use and kept alive across calls;
    concurrent callers are serialized on a lock.  After a protocol error
    or timeout the child is discarded and respawned on the next call.
    """

    kind = "external"

    def __init__(self, command: str | list[str], timeout: float = DEFAULT_TIMEOUT):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = float(timeout)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                bufsize=0,
            )
        except OSError as exc:
            self._proc = None
            raise ProcessUnavailable(f"cannot start {self.command}: {exc}") from exc
        return self._proc

    def _read_exact(self, proc: subprocess.Popen, count: int, deadline: float) -> bytes:
        fd = proc.stdout.fileno()
        buf = bytearray()
        while len(buf) < count:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise Timeout(f"no response within {self.timeout} s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise Timeout(f"no response within {self.timeout} s")
            chunk = os.read(fd, count - len(buf))
            if chunk == b"":
                raise ProcessUnavailable("external projector closed its output")
            buf += chunk
        return bytes(buf)

    def project(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64).ravel()
        n = y.size
        with self._lock:
            proc = self._ensure_process()
            try:
                request = PROTOCOL_MAGIC + struct.pack("<I", n) + y.astype("<f8").tobytes()
                try:
                    proc.stdin.write(request)
                    proc.stdin.flush()
                except (BrokenPipeError, OSError) as exc:
                    raise ProcessUnavailable(f"external projector died: {exc}") from exc
                deadline = time.monotonic() + self.timeout
                (resp_n,) = struct.unpack("<I", self._read_exact(proc, 4, deadline))
                if resp_n != n:
                    raise ProtocolViolation(f"sent {n} values, response declares {resp_n}")
                payload = self._read_exact(proc, 8 * n, deadline)
            except Exception:
                self.close()
                raise
        out = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        if not np.isfinite(out).all():
            raise ProtocolViolation("response contains non-finite values")
        return resimplex(out)

    def close(self) -> None:
        """Terminate the child process; safe to call repeatedly."""
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.wait(timeout=2.0)
        except Exception:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "ExternalProjector":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass
