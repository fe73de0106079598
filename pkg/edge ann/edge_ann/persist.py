"""Index file format (EANN) and size accounting.

Layout, little-endian throughout (see FORMAT.md for an annotated example):

    header   magic "EANN", version u16, kind u8, n u64, dim u32,
             num_trees u32, leaf_threshold u32, flags u32, build_seed u64
    vectors  n x dim float32, present when flags bit 0 is set
    trees    per tree: node count u32, then nodes in preorder
             leaf     tag 0, count u32, count x u32 ids
             anchor   tag 1, skip u32, p1 u32, p2 u32, delta_d f32
             baseline tag 2, skip u32, dim x f32 normal, f32 offset

`skip` is the byte length of the node's left subtree, i.e. the distance from
the end of the node record to its right child.
"""
import struct
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .baseline_tree import BaselineForest, BaselineNode
from .edge_tree import AnchorNode, BuildConfig, Forest, LeafNode, iter_nodes
from .errors import ConfigError, IndexFormatError, TruncatedIndexError
from .logger import get_logger
from .vecstore import VecStore

logger = get_logger(__name__)

MAGIC = b"EANN"
FORMAT_VERSION = 1

KIND_EDGE = 0
KIND_BASELINE = 1
KIND_CODES = {"edge": KIND_EDGE, "baseline": KIND_BASELINE}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}

FLAG_VECTORS = 1

TAG_LEAF = 0
TAG_ANCHOR = 1
TAG_BASELINE = 2

_HEADER = struct.Struct("<4sHBQIIIIQ")
_U32 = struct.Struct("<I")
_ANCHOR = struct.Struct("<IIf")
_F32 = struct.Struct("<f")
_TAG = struct.Struct("<B")

HEADER_BYTES = _HEADER.size
ANCHOR_PAYLOAD_BYTES = _ANCHOR.size
TAG_BYTES = 1
SKIP_BYTES = 4
COUNT_BYTES = 4
ID_BYTES = 4


@dataclass(frozen=True)
class IndexHeader:
    magic: bytes
    format_version: int
    kind: int
    n: int
    dim: int
    num_trees: int
    leaf_threshold: int
    flags: int
    build_seed: int

    @property
    def vectors_embedded(self) -> bool:
        return bool(self.flags & FLAG_VECTORS)

    def pack(self) -> bytes:
        return _HEADER.pack(
            self.magic, self.format_version, self.kind, self.n, self.dim,
            self.num_trees, self.leaf_threshold, self.flags, self.build_seed,
        )


@dataclass
class SizeReport:
    header_bytes: int
    vector_bytes: int
    internal_node_bytes: int
    leaf_bytes: int
    framing_bytes: int
    total_bytes: int
    predicted_internal_bytes: int
    internal_nodes: int = 0
    leaf_nodes: int = 0
    payload_bytes_per_internal: int = 0

    @property
    def structure_bytes(self) -> int:
        """Everything except the embedded vector block."""
        return self.total_bytes - self.vector_bytes

    def to_dict(self) -> dict:
        out = asdict(self)
        out["structure_bytes"] = self.structure_bytes
        return out


def internal_payload_bytes(kind: str, dim: int) -> int:
    """Bytes a single internal node stores, excluding tag and skip."""
    if kind == "edge":
        return ANCHOR_PAYLOAD_BYTES
    if kind == "baseline":
        return 4 * dim + 4
    raise ConfigError(f"unknown forest kind {kind!r}")


@lru_cache(maxsize=None)
def predicted_internal_nodes(n: int, leaf_threshold: int) -> int:
    """Internal node count of one perfectly median-balanced tree over n items."""
    if n <= leaf_threshold:
        return 0
    half = n // 2
    return 1 + predicted_internal_nodes(n - half, leaf_threshold) + predicted_internal_nodes(half, leaf_threshold)


def _predicted_report(n, dim, leaf_threshold, num_trees, kind, embed_vectors) -> SizeReport:
    if min(n, dim, leaf_threshold, num_trees) < 1:
        raise ConfigError("n, dim, leaf_threshold and num_trees must be positive")
    internal = predicted_internal_nodes(n, leaf_threshold)
    leaves = internal + 1
    payload = internal_payload_bytes(kind, dim)
    internal_bytes = num_trees * internal * payload
    leaf_bytes = num_trees * (leaves * COUNT_BYTES + n * ID_BYTES)
    framing = num_trees * (COUNT_BYTES + (internal + leaves) * TAG_BYTES + internal * SKIP_BYTES)
    vector_bytes = n * dim * 4 if embed_vectors else 0
    total = HEADER_BYTES + vector_bytes + internal_bytes + leaf_bytes + framing
    return SizeReport(
        HEADER_BYTES, vector_bytes, internal_bytes, leaf_bytes, framing, total, internal_bytes,
        num_trees * internal, num_trees * leaves, payload,
    )


def predict_size(n: int, dim: int, leaf_threshold: int, num_trees: int, kind: str, embed_vectors: bool = True) -> int:
    """Closed-form file size for perfectly balanced trees.

    Anchor forests grow as num_trees * (N/T + N) with no dim term outside the
    vector block; baseline forests as num_trees * (d * N/T + N).
    """
    return _predicted_report(n, dim, leaf_threshold, num_trees, kind, embed_vectors).total_bytes


def _encode_tree(root, kind: str, counts: dict) -> bytes:
    buf = bytearray()
    nodes = 0
    stack = [(root, None)]
    while stack:
        node, patch = stack.pop()
        if patch is not None:
            skip_pos, node_end = patch
            _U32.pack_into(buf, skip_pos, len(buf) - node_end)
        nodes += 1

        if isinstance(node, LeafNode):
            ids = np.asarray(node.ids, dtype="<u4")
            buf.append(TAG_LEAF)
            buf += _U32.pack(ids.size)
            buf += ids.tobytes()
            counts["leaf_nodes"] += 1
            counts["leaf_bytes"] += COUNT_BYTES + ids.size * ID_BYTES
            counts["framing"] += TAG_BYTES
            continue

        if isinstance(node, AnchorNode) and kind == "edge":
            buf.append(TAG_ANCHOR)
            skip_pos = len(buf)
            buf += _U32.pack(0)
            payload = _ANCHOR.pack(node.p1, node.p2, float(node.delta_d))
        elif isinstance(node, BaselineNode) and kind == "baseline":
            buf.append(TAG_BASELINE)
            skip_pos = len(buf)
            buf += _U32.pack(0)
            payload = np.asarray(node.normal, dtype="<f4").tobytes() + _F32.pack(float(node.offset))
        else:
            raise IndexFormatError(f"{type(node).__name__} cannot be stored in a {kind} index")

        buf += payload
        counts["internal_nodes"] += 1
        counts["internal_bytes"] += len(payload)
        counts["framing"] += TAG_BYTES + SKIP_BYTES
        stack.append((node.right, (skip_pos, len(buf))))
        stack.append((node.left, None))

    counts["framing"] += COUNT_BYTES
    return _U32.pack(nodes) + bytes(buf)


def serialize(forest: Forest, store: VecStore, path, embed_vectors: bool = True) -> SizeReport:
    """Write forest (and optionally store) to path; returns exact byte accounting."""
    forest.check_store(store)
    path = Path(path)
    kind = forest.kind
    header = IndexHeader(
        MAGIC, FORMAT_VERSION, KIND_CODES[kind], store.n, store.dim, len(forest.trees),
        forest.config.leaf_threshold, FLAG_VECTORS if embed_vectors else 0, int(forest.config.seed),
    )
    counts = {"internal_nodes": 0, "leaf_nodes": 0, "internal_bytes": 0, "leaf_bytes": 0, "framing": 0}

    vector_block = store.data.astype("<f4", copy=False).tobytes() if embed_vectors else b""
    with open(path, "wb") as f:
        f.write(header.pack())
        f.write(vector_block)
        for root in forest.trees:
            f.write(_encode_tree(root, kind, counts))

    payload = internal_payload_bytes(kind, store.dim)
    predicted = _predicted_report(store.n, store.dim, forest.config.leaf_threshold, len(forest.trees), kind, embed_vectors)
    report = SizeReport(
        header_bytes=HEADER_BYTES,
        vector_bytes=len(vector_block),
        internal_node_bytes=counts["internal_bytes"],
        leaf_bytes=counts["leaf_bytes"],
        framing_bytes=counts["framing"],
        total_bytes=HEADER_BYTES + len(vector_block) + counts["internal_bytes"] + counts["leaf_bytes"] + counts["framing"],
        predicted_internal_bytes=predicted.internal_node_bytes,
        internal_nodes=counts["internal_nodes"],
        leaf_nodes=counts["leaf_nodes"],
        payload_bytes_per_internal=payload,
    )
    logger.debug(f"Wrote {kind} index to {path}: {report.total_bytes} bytes")
    return report


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int) -> int:
        start = self.pos
        if start + size > len(self.data):
            raise TruncatedIndexError(f"index truncated at byte {start} (needed {size} more bytes)")
        self.pos += size
        return start

    def unpack(self, st: struct.Struct):
        return st.unpack_from(self.data, self.take(st.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        start = self.take(count * np.dtype(dtype).itemsize)
        return np.frombuffer(self.data, dtype=dtype, count=count, offset=start).copy()


def _parse_header(reader: _Reader) -> IndexHeader:
    header = IndexHeader(*reader.unpack(_HEADER))
    if header.magic != MAGIC:
        raise IndexFormatError(f"bad magic {header.magic!r}, expected {MAGIC!r}")
    if header.format_version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported format version {header.format_version}")
    if header.kind not in KIND_NAMES:
        raise IndexFormatError(f"unknown index kind {header.kind}")
    if header.n < 1 or header.dim < 1 or header.num_trees < 1:
        raise IndexFormatError("header declares an empty index")
    if header.leaf_threshold < 2:
        raise IndexFormatError(f"invalid leaf threshold {header.leaf_threshold}")
    return header


def read_header(path) -> IndexHeader:
    with open(path, "rb") as f:
        return _parse_header(_Reader(f.read(HEADER_BYTES)))


def _decode_tree(reader: _Reader, header: IndexHeader):
    kind = KIND_NAMES[header.kind]
    (node_count,) = reader.unpack(_U32)
    root = None
    # open child slots, next one on top: (parent, slot, expected start offset)
    holes = [(None, "root", None)]
    for _ in range(node_count):
        if not holes:
            raise IndexFormatError("tree holds more nodes than its structure links")
        parent, slot, expected = holes.pop()
        if expected is not None and reader.pos != expected:
            raise IndexFormatError(f"right child starts at {reader.pos}, skip offset points to {expected}")

        (tag,) = reader.unpack(_TAG)
        if tag == TAG_LEAF:
            (count,) = reader.unpack(_U32)
            if count == 0:
                raise IndexFormatError("empty leaf")
            ids = reader.array("<u4", count)
            if ids.max() >= header.n:
                raise IndexFormatError(f"dangling vector id {int(ids.max())} (n={header.n})")
            node = LeafNode(ids.astype(np.uint32))
        elif tag == TAG_ANCHOR and kind == "edge":
            (skip,) = reader.unpack(_U32)
            p1, p2, delta_d = reader.unpack(_ANCHOR)
            if p1 >= header.n or p2 >= header.n:
                raise IndexFormatError(f"dangling anchor id in ({p1}, {p2}) (n={header.n})")
            node = AnchorNode(p1, p2, np.float32(delta_d))
        elif tag == TAG_BASELINE and kind == "baseline":
            (skip,) = reader.unpack(_U32)
            normal = reader.array("<f4", header.dim).astype(np.float32)
            (offset,) = reader.unpack(_F32)
            node = BaselineNode(normal, np.float32(offset))
        else:
            raise IndexFormatError(f"unexpected node tag {tag} in a {kind} index")

        if parent is None:
            root = node
        else:
            setattr(parent, slot, node)
        if not isinstance(node, LeafNode):
            holes.append((node, "right", reader.pos + skip))
            holes.append((node, "left", None))

    if holes:
        raise TruncatedIndexError("tree ended before all children were read")
    return root


def deserialize(path) -> Tuple[Forest, Optional[VecStore]]:
    """Read an index file; the store is returned only when vectors are embedded."""
    data = Path(path).read_bytes()
    reader = _Reader(data)
    header = _parse_header(reader)

    store = None
    if header.vectors_embedded:
        vectors = reader.array("<f4", header.n * header.dim).reshape(header.n, header.dim)
        store = VecStore(vectors)

    trees = [_decode_tree(reader, header) for _ in range(header.num_trees)]
    if reader.pos != len(data):
        raise IndexFormatError(f"{len(data) - reader.pos} trailing bytes after the last tree")

    config = BuildConfig(leaf_threshold=header.leaf_threshold, num_trees=header.num_trees, seed=header.build_seed)
    cls = BaselineForest if header.kind == KIND_BASELINE else Forest
    forest = cls(trees, config, header.n, header.dim, store.fingerprint if store is not None else None)
    logger.debug(f"Loaded {KIND_NAMES[header.kind]} index from {path} ({len(data)} bytes)")
    return forest, store


def measure_size(forest: Forest, embed_vectors: bool = True) -> SizeReport:
    """Byte accounting of `forest` as serialize would write it, without writing."""
    payload = internal_payload_bytes(forest.kind, forest.dim)
    internal = leaves = ids = 0
    for root in forest.trees:
        for node, _ in iter_nodes(root):
            if isinstance(node, LeafNode):
                leaves += 1
                ids += int(node.ids.size)
            else:
                internal += 1
    internal_bytes = internal * payload
    leaf_bytes = leaves * COUNT_BYTES + ids * ID_BYTES
    framing = len(forest.trees) * COUNT_BYTES + (internal + leaves) * TAG_BYTES + internal * SKIP_BYTES
    vector_bytes = forest.n * forest.dim * 4 if embed_vectors else 0
    predicted = _predicted_report(
        forest.n, forest.dim, forest.config.leaf_threshold, len(forest.trees), forest.kind, embed_vectors
    )
    return SizeReport(
        HEADER_BYTES, vector_bytes, internal_bytes, leaf_bytes, framing,
        HEADER_BYTES + vector_bytes + internal_bytes + leaf_bytes + framing,
        predicted.internal_node_bytes, internal, leaves, payload,
    )
