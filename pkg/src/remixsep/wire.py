"""Child-process wire protocol: one JSON header line, then raw float32 payload.

Used by external separation models and external metrics. The payload is
channels*num_samples little-endian float32 values, channel-interleaved
(sample-major, like WAV frames). Children persist across requests; one
request is in flight per child at a time.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import subprocess
import threading
import time
from collections import deque

import numpy as np


class ExternalProcessError(Exception):
    """Base class for external child-process failures."""


class ChildExitedError(ExternalProcessError):
    """The child terminated; carries its exit code and stderr tail."""


class WireProtocolError(ExternalProcessError):
    """The child replied with something other than the wire contract."""


class WireTimeoutError(ExternalProcessError):
    """The child did not reply within the per-call timeout."""


def pack_samples(arr: np.ndarray) -> bytes:
    """(channels, num_samples) float64 -> interleaved little-endian float32 bytes."""
    return np.ascontiguousarray(arr.T, dtype="<f4").tobytes()


def unpack_samples(data: bytes, channels: int, num_samples: int) -> np.ndarray:
    flat = np.frombuffer(data, dtype="<f4")
    if flat.size != channels * num_samples:
        raise WireProtocolError(
            f"payload holds {flat.size} samples, expected {channels * num_samples}"
        )
    return flat.reshape(num_samples, channels).T.astype(np.float64)


class ChildProcess:
    """A persistent child speaking the header+payload framing over stdio."""

    def __init__(self, command, env: dict | None = None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        full_env = dict(os.environ)
        if env:
            full_env.update(env)
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                env=full_env,
            )
        except OSError as exc:
            raise ChildExitedError(f"failed to spawn {self.command!r}: {exc}") from exc
        self._buf = bytearray()
        self._stderr_tail: deque[bytes] = deque(maxlen=64)
        self._stderr_thread = threading.Thread(target=self._drain_stderr, daemon=True)
        self._stderr_thread.start()
        self.lock = threading.Lock()

    def _drain_stderr(self):
        try:
            for line in self._proc.stderr:
                self._stderr_tail.append(line)
        except ValueError:
            pass

    def stderr_text(self) -> str:
        return b"".join(self._stderr_tail).decode("utf-8", "replace").strip()

    @property
    def alive(self) -> bool:
        return self._proc.poll() is None

    def _dead(self, context: str) -> ChildExitedError:
        code = self._proc.poll()
        detail = self.stderr_text()
        msg = f"child {self.command[0]} exited with code {code} while {context}"
        if detail:
            msg += f"; stderr: {detail}"
        return ChildExitedError(msg)

    def send(self, data: bytes):
        try:
            self._proc.stdin.write(data)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            time.sleep(0.05)
            raise self._dead("writing request") from exc

    def _fill(self, deadline: float, context: str):
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise WireTimeoutError(f"timed out {context} (child {self.command[0]})")
        fd = self._proc.stdout.fileno()
        ready, _, _ = select.select([fd], [], [], remaining)
        if not ready:
            raise WireTimeoutError(f"timed out {context} (child {self.command[0]})")
        chunk = os.read(fd, 1 << 16)
        if not chunk:
            self._proc.wait(timeout=5)
            raise self._dead(context)
        self._buf.extend(chunk)

    def read_line(self, timeout: float, context: str = "reading reply header") -> bytes:
        deadline = time.monotonic() + timeout
        while True:
            idx = self._buf.find(b"\n")
            if idx >= 0:
                line = bytes(self._buf[: idx + 1])
                del self._buf[: idx + 1]
                return line
            self._fill(deadline, context)

    def read_exact(self, n: int, timeout: float, context: str = "reading reply payload") -> bytes:
        deadline = time.monotonic() + timeout
        while len(self._buf) < n:
            self._fill(deadline, context)
        data = bytes(self._buf[:n])
        del self._buf[:n]
        return data

    def close(self):
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait(timeout=2)

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def _parse_header_line(line: bytes, required: tuple[str, ...]) -> dict:
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WireProtocolError(f"malformed reply header {line[:120]!r}") from exc
    if not isinstance(header, dict) or any(k not in header for k in required):
        raise WireProtocolError(f"reply header missing fields {required}: {header!r}")
    return header


def model_request(child: ChildProcess, arr: np.ndarray, sample_rate: int, timeout: float) -> np.ndarray:
    """One model exchange: send audio, receive same-shape audio."""
    channels, num_samples = arr.shape
    header = {"sample_rate": int(sample_rate), "channels": int(channels), "num_samples": int(num_samples)}
    with child.lock:
        child.send(json.dumps(header).encode() + b"\n" + pack_samples(arr))
        reply = _parse_header_line(
            child.read_line(timeout), ("sample_rate", "channels", "num_samples")
        )
        out_channels = int(reply["channels"])
        out_samples = int(reply["num_samples"])
        payload = child.read_exact(out_channels * out_samples * 4, timeout)
    if (int(reply["sample_rate"]), out_channels, out_samples) != (int(sample_rate), channels, num_samples):
        raise WireProtocolError(
            f"model reply shape {reply} does not match request {header}"
        )
    return unpack_samples(payload, out_channels, out_samples)


def metric_request(
    child: ChildProcess,
    reference: np.ndarray | None,
    estimate: np.ndarray,
    sample_rate: int,
    timeout: float,
) -> float:
    """One metric exchange: send (reference?, estimate), receive {"score": x}."""
    channels, num_samples = estimate.shape
    header = {
        "sample_rate": int(sample_rate),
        "channels": int(channels),
        "num_samples": int(num_samples),
        "with_reference": reference is not None,
    }
    payload = b""
    if reference is not None:
        payload += pack_samples(reference)
    payload += pack_samples(estimate)
    with child.lock:
        child.send(json.dumps(header).encode() + b"\n" + payload)
        reply = _parse_header_line(child.read_line(timeout, "reading score"), ("score",))
    try:
        return float(reply["score"])
    except (TypeError, ValueError) as exc:
        raise WireProtocolError(f"score is not a number: {reply!r}") from exc
