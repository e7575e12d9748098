"""
KVOX binary voxel format.

Layout (16 byte header followed by the payload):
    magic     4 bytes   "KVOX"
    version   u1
    k         u1        delta = 2^-k
    ndim      u1        2 or 3
    extents   3 x u1    half extent of the box per axis (0 for unused axes)
    crc       u2 le     CRC16 of the payload
    reserved  4 bytes   zero
    payload   occupancy bits in C order, packed little-endian within a byte
"""
import numpy as np
from bitstring import ConstBitStream, pack
from crccheck.crc import Crc16

from voxel.grid import VoxelSet, grid_shape
from util.exceptions import VoxelException

MAGIC = b"KVOX"
VERSION = 1
HEADER_SIZE = 16
_HEADER_FMT = "bytes:4, uint:8, uint:8, uint:8, uint:8, uint:8, uint:8, uintle:16, uint:32"

class KvoxHeader:
    """Decoded KVOX header"""

    def __init__(self, version, k, ndim, half_extents, crc):
        self.version = version
        self.k = k
        self.ndim = ndim
        self.half_extents = half_extents
        self.crc = crc

    @property
    def scale(self):
        return 2.0 ** -self.k

    @property
    def payload_size(self):
        cells = int(np.prod(grid_shape(self.scale, self.half_extents)))
        return (cells + 7) // 8

    @staticmethod
    def from_bytes(data):
        if len(data) < HEADER_SIZE:
            raise VoxelException("truncated KVOX header")
        fields = ConstBitStream(bytes(data[:HEADER_SIZE])).readlist(_HEADER_FMT)
        magic, version, k, ndim, e0, e1, e2, crc, _ = fields
        if magic != MAGIC:
            raise VoxelException(f"bad KVOX magic {magic!r}")
        if version != VERSION:
            raise VoxelException(f"unsupported KVOX version {version}")
        if ndim not in (2, 3):
            raise VoxelException(f"unsupported KVOX dimension {ndim}")
        return KvoxHeader(version, k, ndim, (e0, e1, e2)[:ndim], crc)

def encode(e: VoxelSet) -> bytes:
    """Serialize a VoxelSet to KVOX bytes.

    :e: VoxelSet of dimension 2 or 3
    :returns: header followed by the packed payload

    """
    if e.ndim not in (2, 3):
        raise VoxelException(f"cannot encode a {e.ndim}D voxel set")
    payload = np.packbits(e.occupancy.reshape(-1), bitorder="little").tobytes()
    extents = list(e.half_extents) + [0] * (3 - e.ndim)
    header = pack(_HEADER_FMT, MAGIC, VERSION, e.k, e.ndim, *extents,
                  Crc16.calc(payload), 0)
    return header.tobytes() + payload

def decode(data: bytes) -> VoxelSet:
    """Parse KVOX bytes back into a VoxelSet.

    :data: bytes as produced by encode
    :returns: VoxelSet
    :raises VoxelException: on a bad header, size or checksum

    """
    header = KvoxHeader.from_bytes(data)
    payload = bytes(data[HEADER_SIZE:])
    if len(payload) != header.payload_size:
        raise VoxelException(f"KVOX payload has {len(payload)} bytes, "
                             f"expected {header.payload_size}")
    if Crc16.calc(payload) != header.crc:
        raise VoxelException("KVOX payload checksum mismatch")
    shape = grid_shape(header.scale, header.half_extents)
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little",
                         count=int(np.prod(shape)))
    return VoxelSet(bits.astype(bool).reshape(shape), header.scale, header.half_extents)

def write(e: VoxelSet, path):
    with open(path, "wb") as f:
        f.write(encode(e))

def read(path) -> VoxelSet:
    with open(path, "rb") as f:
        return decode(f.read())
