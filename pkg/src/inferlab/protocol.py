"""Two-party split inference/training over a framed binary wire format.

Frame layout (all integers little-endian)::

    "SPLT" | version u8 (=1) | type u8 | dtype u8 | ndim u8 | dims u32 x ndim
    | seq u64 | payload | crc32 u32

``type`` is 1 activation, 2 result, 3 gradient. ``dtype`` 0 is float32,
1 is float64. The CRC (IEEE, as in zlib) covers every byte before it.

Party A (the data holder) owns the front layers and sends activations;
party B owns the rest and answers with results (inference) or cut-layer
gradients (training). A :class:`Tap` on the channel records every frame it
sees, which is exactly what an eavesdropper gets.
"""
from __future__ import annotations

import enum
import struct
import threading
import zlib
from dataclasses import dataclass

import numpy as np

from .models import _images_nchw, batch_slices
from .nn import Tensor, TrainConfig, cross_entropy, make_optimizer, no_grad

MAGIC = b"SPLT"
VERSION = 1
_HEAD = struct.Struct("<4sBBBB")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}


class MsgType(enum.IntEnum):
    ACTIVATION = 1
    RESULT = 2
    GRADIENT = 3


class WireError(ValueError):
    pass


class BadMagic(WireError):
    pass


class UnsupportedVersion(WireError):
    pass


class BadHeader(WireError):
    pass


class ChecksumError(WireError):
    pass


class TruncatedMessage(WireError):
    pass


@dataclass(eq=False)
class WireMessage:
    msg_type: MsgType
    tensor: np.ndarray
    seq: int

    def __post_init__(self):
        self.msg_type = MsgType(self.msg_type)
        t = np.asarray(self.tensor)
        if t.dtype not in (np.float32, np.float64):
            t = t.astype(np.float32)
        self.tensor = t

    @property
    def direction(self):
        return "A->B" if self.msg_type is MsgType.ACTIVATION else "B->A"

    def __eq__(self, other):
        if not isinstance(other, WireMessage):
            return NotImplemented
        return (self.msg_type == other.msg_type and self.seq == other.seq
                and self.tensor.dtype == other.tensor.dtype and self.tensor.shape == other.tensor.shape
                and self.tensor.tobytes() == other.tensor.tobytes())

    def __repr__(self):
        return f"WireMessage({self.msg_type.name}, shape={self.tensor.shape}, dtype={self.tensor.dtype}, seq={self.seq})"


def serialize(msg: WireMessage) -> bytes:
    t = msg.tensor
    dt = t.dtype.newbyteorder("<")
    code = _DTYPE_CODES[dt]
    if t.ndim > 255:
        raise WireError("too many dimensions")
    body = b"".join([
        _HEAD.pack(MAGIC, VERSION, int(msg.msg_type), code, t.ndim),
        struct.pack(f"<{t.ndim}I", *t.shape),
        struct.pack("<Q", msg.seq),
        np.ascontiguousarray(t, dtype=dt).tobytes(),
    ])
    return body + struct.pack("<I", zlib.crc32(body))


def _parse_header(head):
    magic, version, mtype, code, ndim = _HEAD.unpack(head)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported version {version}")
    if mtype not in MsgType._value2member_map_:
        raise BadHeader(f"unknown message type {mtype}")
    if code not in _DTYPES:
        raise BadHeader(f"unknown dtype code {code}")
    return MsgType(mtype), _DTYPES[code], ndim


def _frame_length(dims, dtype, ndim):
    return _HEAD.size + 4 * ndim + 8 + dtype.itemsize * int(np.prod(dims, dtype=np.int64)) + 4


def deserialize(buf: bytes) -> WireMessage:
    """Parse exactly one frame; rejects bad magic/version/header, truncation and CRC mismatch."""
    buf = bytes(buf)
    if len(buf) < _HEAD.size:
        raise TruncatedMessage("frame shorter than its fixed header")
    mtype, dtype, ndim = _parse_header(buf[:_HEAD.size])
    if len(buf) < _HEAD.size + 4 * ndim + 8:
        raise TruncatedMessage("frame ends inside the header")
    dims = struct.unpack_from(f"<{ndim}I", buf, _HEAD.size)
    total = _frame_length(dims, dtype, ndim)
    if len(buf) < total:
        raise TruncatedMessage(f"frame has {len(buf)} bytes, header promises {total}")
    if len(buf) > total:
        raise WireError(f"{len(buf) - total} trailing bytes after frame")
    (crc,) = struct.unpack_from("<I", buf, total - 4)
    if zlib.crc32(buf[:total - 4]) != crc:
        raise ChecksumError("CRC32 mismatch")
    pos = _HEAD.size + 4 * ndim
    (seq,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    payload = np.frombuffer(buf, dtype=dtype, count=int(np.prod(dims, dtype=np.int64)), offset=pos)
    return WireMessage(mtype, payload.reshape(dims).astype(dtype.newbyteorder("=")), seq)


def read_frame(stream) -> bytes | None:
    """Read one raw frame from a binary stream; ``None`` at a clean EOF."""
    head = stream.read(_HEAD.size)
    if not head:
        return None
    if len(head) < _HEAD.size:
        raise TruncatedMessage("stream ended inside a frame header")
    _, dtype, ndim = _parse_header(head)
    rest = stream.read(4 * ndim + 8)
    if len(rest) < 4 * ndim + 8:
        raise TruncatedMessage("stream ended inside a frame header")
    dims = struct.unpack_from(f"<{ndim}I", rest, 0)
    remaining = _frame_length(dims, dtype, ndim) - len(head) - len(rest)
    tail = stream.read(remaining)
    if len(tail) < remaining:
        raise TruncatedMessage("stream ended inside a frame payload")
    return head + rest + tail


def read_message(stream) -> WireMessage | None:
    frame = read_frame(stream)
    return None if frame is None else deserialize(frame)


def write_message(stream, msg: WireMessage):
    stream.write(serialize(msg))
    if hasattr(stream, "flush"):
        stream.flush()


class Transcript:
    """Ordered, direction-tagged log of observed messages."""

    def __init__(self, messages=()):
        self._messages = []
        self._last_seq = {}
        self._lock = threading.Lock()
        self.frozen = False
        for m in messages:
            self.append(m)

    def append(self, msg: WireMessage):
        with self._lock:
            if self.frozen:
                raise RuntimeError("transcript is frozen")
            last = self._last_seq.get(msg.direction)
            if last is not None and msg.seq <= last:
                raise ValueError(f"sequence number {msg.seq} not increasing on {msg.direction}")
            self._last_seq[msg.direction] = msg.seq
            self._messages.append(msg)

    def freeze(self):
        self.frozen = True
        return self

    def __len__(self):
        return len(self._messages)

    def __iter__(self):
        return iter(list(self._messages))

    def __getitem__(self, i):
        return self._messages[i]

    def of_type(self, msg_type):
        return [m for m in self._messages if m.msg_type == msg_type]

    def to_bytes(self) -> bytes:
        return b"".join(serialize(m) for m in self._messages)

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        out = cls()
        with open(path, "rb") as f:
            while (m := read_message(f)) is not None:
                out.append(m)
        return out.freeze()


class Tap:
    """Passive observer: parses every frame crossing the channel."""

    def __init__(self, transcript=None):
        self.transcript = Transcript() if transcript is None else transcript

    def observe(self, frame: bytes):
        self.transcript.append(deserialize(frame))


class PartyB:
    """Holds the back half. Answers activations with results, or in training
    mode with the gradient of the loss w.r.t. the received activation.

    Training labels are assumed shared between the parties ahead of time;
    the driver hands them over with :meth:`expect_labels`.
    """

    def __init__(self, model, config: TrainConfig | None = None, training=False, result_dtype=np.float64):
        self.model = model
        self.training = training
        self.result_dtype = result_dtype
        self.optimizer = make_optimizer(model.params(), config) if training else None
        self._labels = None
        self._seq = 0

    def expect_labels(self, labels):
        self._labels = np.asarray(labels)

    def handle(self, frame: bytes) -> bytes:
        msg = deserialize(frame)
        if msg.msg_type is not MsgType.ACTIVATION:
            raise WireError(f"party B cannot handle {msg.msg_type.name}")
        x = msg.tensor.astype(np.float64)
        if x.shape[1:] != self.model.input_shape:
            x = x[None]
        if x.shape[1:] != self.model.input_shape:
            raise ValueError(f"activation shape {msg.tensor.shape} does not fit party B input {self.model.input_shape}")
        self._seq += 1
        if not self.training:
            with no_grad():
                probs = self.model.forward(Tensor(x)).data
            payload = probs if msg.tensor.shape[1:] == self.model.input_shape else probs[0]
            return serialize(WireMessage(MsgType.RESULT, payload.astype(self.result_dtype), self._seq))
        if self._labels is None or len(self._labels) != len(x):
            raise RuntimeError("party B has no labels for this batch")
        inp = Tensor(x, requires_grad=True)
        loss = cross_entropy(self.model.forward(inp), self._labels)
        loss.backward()
        self.optimizer.step()
        self._labels = None
        self.last_loss = float(loss.data)
        return serialize(WireMessage(MsgType.GRADIENT, inp.grad, self._seq))


class Channel:
    """Synchronous in-process duplex link to a party B handler."""

    def __init__(self, handler, tap: Tap | None = None):
        self.handler = handler
        self.tap = tap

    def request(self, msg: WireMessage) -> WireMessage:
        frame = serialize(msg)
        if self.tap:
            self.tap.observe(frame)
        reply = self.handler(frame)
        if self.tap:
            self.tap.observe(reply)
        return deserialize(reply)


class StreamChannel(Channel):
    """Same request/response contract over a reliable byte stream pair."""

    def __init__(self, reader, writer, tap: Tap | None = None):
        super().__init__(handler=None, tap=tap)
        self.reader, self.writer = reader, writer

    def request(self, msg: WireMessage) -> WireMessage:
        frame = serialize(msg)
        if self.tap:
            self.tap.observe(frame)
        self.writer.write(frame)
        self.writer.flush()
        reply = read_frame(self.reader)
        if reply is None:
            raise TruncatedMessage("peer closed the stream")
        if self.tap:
            self.tap.observe(reply)
        return deserialize(reply)


def serve_stream(reader, writer, party_b: PartyB):
    """Answer frames from ``reader`` until EOF (run in party B's process/thread)."""
    while (frame := read_frame(reader)) is not None:
        writer.write(party_b.handle(frame))
        writer.flush()


def _check_halves(model_a, model_b):
    if tuple(model_a.output_shape) != tuple(model_b.input_shape):
        raise ValueError(f"half-model mismatch: party A emits {model_a.output_shape}, "
                         f"party B expects {model_b.input_shape}")


def downcast(a, dtype=np.float32):
    """What an activation looks like after a trip through the wire."""
    return np.asarray(a).astype(dtype).astype(np.float64)


def collaborative_infer(model_a, model_b, image, channel=None, tap=True, wire_dtype=np.float32):
    """Run one image (or batch) through both halves.

    Party A sends its cut-layer activation as ``wire_dtype``; party B
    answers with float64 class probabilities. Returns ``(probs, transcript)``
    where the transcript holds what the tap saw (empty if ``tap`` is false).
    """
    _check_halves(model_a, model_b)
    x = np.asarray(image, dtype=np.float64)
    single = x.ndim == 2 or (x.ndim == 3 and x.shape[0] == 1)
    x = _images_nchw(x)
    observer = Tap() if tap else None
    if channel is None:
        channel = Channel(PartyB(model_b).handle, observer)
    elif observer is not None:
        channel.tap = observer
    with no_grad():
        act = model_a.forward(Tensor(x)).data
    payload = act[0] if single else act
    reply = channel.request(WireMessage(MsgType.ACTIVATION, payload.astype(wire_dtype), 1))
    if reply.msg_type is not MsgType.RESULT:
        raise WireError(f"expected RESULT, got {reply.msg_type.name}")
    transcript = observer.transcript.freeze() if observer else Transcript().freeze()
    return reply.tensor.astype(np.float64), transcript


class DataParty:
    """Party A during training: owns the data order, the front half and its optimizer."""

    def __init__(self, model, config: TrainConfig):
        self.model = model
        self.optimizer = make_optimizer(model.params(), config)
        self.rng = np.random.default_rng(config.rng_seed)
        self.seq = 0


def collaborative_train_epoch(party_a: DataParty, party_b: PartyB, dataset, config: TrainConfig,
                              tap: Tap | None = None, channel=None):
    """One epoch of split training. Returns ``(party_a, party_b, transcript)``.

    Activations and gradients travel as float64, so the result is bit-for-bit
    the same as training the unsplit model with the same seed.
    """
    labels = np.asarray(dataset.labels)
    config.check_dataset_size(len(labels))
    _check_halves(party_a.model, party_b.model)
    tap = tap or Tap()
    if channel is None:
        channel = Channel(party_b.handle, tap)
    else:
        channel.tap = tap
    x = _images_nchw(dataset)
    for idx in batch_slices(len(labels), config.batch_size, party_a.rng):
        act = party_a.model.forward(Tensor(x[idx]))
        party_a.seq += 1
        party_b.expect_labels(labels[idx])
        reply = channel.request(WireMessage(MsgType.ACTIVATION, act.data, party_a.seq))
        if reply.msg_type is not MsgType.GRADIENT:
            raise WireError(f"expected GRADIENT, got {reply.msg_type.name}")
        act.backward(reply.tensor.astype(np.float64))
        party_a.optimizer.step()
    return party_a, party_b, tap.transcript.freeze()
