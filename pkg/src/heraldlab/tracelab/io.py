"""Trace corpus file formats: the TRCL binary container and a CSV alternative.

Binary layout (little-endian): header {magic "TRCL", version u16, num_traces
u32, samples_per_trace u32, dt_ps f64, labels flag u8}, then num_traces blocks
of f32 samples, then one u8 true-photon-number label per trace when flagged.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, SchemaError

MAGIC = b"TRCL"
VERSION = 1
_HEADER = struct.Struct("<4sHIIdB")

TRACE_CSV_SCHEMA = "trace-corpus.v1"
SLOPES_CSV_SCHEMA = "slopes.v1"


@dataclass(frozen=True)
class TraceContainer:
    """A corpus of equally long traces with a shared time step."""

    samples: np.ndarray  # (num_traces, samples_per_trace), mV
    dt_ps: float
    labels: np.ndarray | None = None  # true photon numbers, when known

    def __post_init__(self):
        v = np.asarray(self.samples, dtype=np.float32)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 2:
            raise ConfigError("container needs a 2-D block of traces with >= 2 samples each")
        if self.dt_ps <= 0:
            raise ConfigError("dt_ps must be positive")
        object.__setattr__(self, "samples", v)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.uint8)
            if labels.shape != (v.shape[0],):
                raise ConfigError("labels must align one-to-one with traces")
            object.__setattr__(self, "labels", labels)

    @property
    def num_traces(self) -> int:
        return self.samples.shape[0]


def write_trace_container(path, container: TraceContainer) -> None:
    path = Path(path)
    flag = 1 if container.labels is not None else 0
    header = _HEADER.pack(MAGIC, VERSION, container.num_traces,
                          container.samples.shape[1], container.dt_ps, flag)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(container.samples, dtype="<f4").tobytes())
        if flag:
            fh.write(container.labels.tobytes())


class TraceContainerWriter:
    """Incremental TRCL writer: samples stream to disk, labels buffer until close.

    The header is written up front from the declared trace count; close()
    verifies the declared and appended counts agree.
    """

    def __init__(self, path, num_traces: int, samples_per_trace: int, dt_ps: float,
                 labeled: bool):
        if num_traces < 1 or samples_per_trace < 2 or dt_ps <= 0:
            raise ConfigError("invalid container geometry")
        self._fh = open(path, "wb")
        self._fh.write(_HEADER.pack(MAGIC, VERSION, num_traces, samples_per_trace,
                                    dt_ps, 1 if labeled else 0))
        self._expected = num_traces
        self._samples_per_trace = samples_per_trace
        self._labeled = labeled
        self._written = 0
        self._labels: list[np.ndarray] = []

    def append(self, samples: np.ndarray, labels: np.ndarray | None = None) -> None:
        block = np.ascontiguousarray(samples, dtype="<f4")
        if block.ndim != 2 or block.shape[1] != self._samples_per_trace:
            raise SchemaError("chunk shape does not match the declared trace length")
        if self._labeled != (labels is not None):
            raise SchemaError("label presence must match the declared flag")
        self._fh.write(block.tobytes())
        self._written += block.shape[0]
        if labels is not None:
            arr = np.asarray(labels, dtype=np.uint8)
            if arr.shape != (block.shape[0],):
                raise SchemaError("labels must align with the chunk")
            self._labels.append(arr)

    def close(self) -> None:
        try:
            if self._written != self._expected:
                raise SchemaError(
                    f"declared {self._expected} traces but appended {self._written}"
                )
            if self._labeled:
                self._fh.write(np.concatenate(self._labels).tobytes())
        finally:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self._fh.close()
        return False


def read_trace_container(path) -> TraceContainer:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise SchemaError(f"{path} is shorter than a container header")
    magic, version, num, samp, dt_ps, flag = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SchemaError(f"{path} lacks the TRCL magic")
    if version != VERSION:
        raise SchemaError(f"unsupported container version {version}")
    if flag not in (0, 1):
        raise SchemaError(f"invalid labels flag {flag}")
    body = raw[_HEADER.size:]
    expected = num * samp * 4 + (num if flag else 0)
    if len(body) != expected:
        raise SchemaError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    samples = np.frombuffer(body[:num * samp * 4], dtype="<f4").reshape(num, samp)
    labels = np.frombuffer(body[num * samp * 4:], dtype=np.uint8) if flag else None
    return TraceContainer(samples.copy(), dt_ps, None if labels is None else labels.copy())


def write_traces_csv(path, container: TraceContainer) -> None:
    """One trace per row; a schema comment carries dt and the label flag."""
    labeled = container.labels is not None
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={TRACE_CSV_SCHEMA} dt_ps={container.dt_ps:.9g} "
                 f"labeled={int(labeled)}\n")
        cols = [f"s{i}" for i in range(container.samples.shape[1])]
        if labeled:
            cols = ["label"] + cols
        fh.write(",".join(cols) + "\n")
        for i in range(container.num_traces):
            row = [f"{v:.6g}" for v in container.samples[i]]
            if labeled:
                row = [str(int(container.labels[i]))] + row
            fh.write(",".join(row) + "\n")


def read_traces_csv(path) -> TraceContainer:
    path = Path(path)
    with open(path, "r", newline="") as fh:
        schema_line = fh.readline().strip()
        if not schema_line.startswith(f"# schema={TRACE_CSV_SCHEMA}"):
            raise SchemaError(f"{path} lacks the {TRACE_CSV_SCHEMA} schema comment")
        fields = dict(part.split("=", 1) for part in schema_line[2:].split() if "=" in part)
        dt_ps = float(fields["dt_ps"])
        labeled = fields.get("labeled", "0") == "1"
        header = fh.readline().strip().split(",")
        expected_first = "label" if labeled else "s0"
        if not header or header[0] != expected_first:
            raise SchemaError(f"{path}: unexpected header {header[:2]}")
        rows, labels = [], []
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            if labeled:
                labels.append(int(parts[0]))
                parts = parts[1:]
            rows.append([float(v) for v in parts])
    samples = np.asarray(rows, dtype=np.float32)
    return TraceContainer(samples, dt_ps, np.asarray(labels, dtype=np.uint8) if labeled else None)


def write_slopes_csv(path, trace_ids, slopes, assigned, residuals) -> None:
    """Slope/assignment table with the documented column names."""
    trace_ids = np.asarray(trace_ids)
    slopes = np.asarray(slopes, dtype=float)
    assigned = np.asarray(assigned)
    residuals = np.asarray(residuals, dtype=float)
    if not (trace_ids.size == slopes.size == assigned.size == residuals.size):
        raise SchemaError("slope table columns must be aligned")
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={SLOPES_CSV_SCHEMA}\n")
        fh.write("trace_id,slope_mV_per_ns,assigned_n,residual_rms\n")
        for i in range(trace_ids.size):
            fh.write(f"{int(trace_ids[i])},{slopes[i]:.9g},{int(assigned[i])},"
                     f"{residuals[i]:.9g}\n")
