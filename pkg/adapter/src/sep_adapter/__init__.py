"""Stdio adapter: serve numpy audio transforms to a separation engine.

Wire contract (per request): one JSON header line
``{"sample_rate": u32, "channels": u32, "num_samples": u64}`` followed by
``channels * num_samples`` little-endian float32 samples, channel-interleaved
(sample-major). The reply uses the same header-then-payload framing. The
process serves requests until its input stream closes.
"""

from __future__ import annotations

import json
import sys

import numpy as np

__version__ = "0.1.0"

_HEADER_FIELDS = ("sample_rate", "channels", "num_samples")


class AdapterProtocolError(Exception):
    """The parent sent something outside the wire contract."""


class AdapterLoop:
    """Reads framed requests, applies a shape-preserving transform, replies."""

    def __init__(self, input_stream, output_stream, transform):
        self.input_stream = input_stream
        self.output_stream = output_stream
        self.transform = transform

    def serve(self) -> int:
        """Serve until EOF on the input stream. Returns the request count."""
        served = 0
        while True:
            line = self.input_stream.readline()
            if not line:
                return served
            header = self._parse_header(line)
            channels = header["channels"]
            num_samples = header["num_samples"]
            expected = channels * num_samples * 4
            payload = self.input_stream.read(expected)
            if len(payload) != expected:
                raise AdapterProtocolError(
                    f"truncated payload: expected {expected} bytes, got {len(payload)}"
                )
            audio = (
                np.frombuffer(payload, dtype="<f4")
                .reshape(num_samples, channels)
                .T.astype(np.float64)
            )
            out = np.asarray(self.transform(audio), dtype=np.float64)
            if out.shape != audio.shape:
                raise AdapterProtocolError(
                    f"transform changed shape {audio.shape} -> {out.shape}"
                )
            reply = {
                "sample_rate": header["sample_rate"],
                "channels": channels,
                "num_samples": num_samples,
            }
            self.output_stream.write(json.dumps(reply).encode() + b"\n")
            self.output_stream.write(np.ascontiguousarray(out.T, dtype="<f4").tobytes())
            self.output_stream.flush()
            served += 1

    @staticmethod
    def _parse_header(line: bytes) -> dict:
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise AdapterProtocolError(f"malformed header line: {line[:80]!r}") from exc
        if not isinstance(header, dict):
            raise AdapterProtocolError(f"header is not an object: {header!r}")
        for field in _HEADER_FIELDS:
            if field not in header:
                raise AdapterProtocolError(f"header missing {field!r}: {header!r}")
            if not isinstance(header[field], int) or header[field] < 0:
                raise AdapterProtocolError(f"header field {field!r} must be a non-negative int")
        if header["sample_rate"] < 1 or header["channels"] < 1:
            raise AdapterProtocolError(f"invalid header values: {header!r}")
        return {k: header[k] for k in _HEADER_FIELDS}


def serve(transform) -> int:
    """Serve on stdin/stdout; protocol errors print a structured line on stderr.

    Exits the process with status 0 on clean EOF, 2 on a protocol violation.
    """
    loop = AdapterLoop(sys.stdin.buffer, sys.stdout.buffer, transform)
    try:
        loop.serve()
    except AdapterProtocolError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr, flush=True)
        sys.exit(2)
    return 0
