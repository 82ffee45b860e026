"""Merkle commitments over address lists, used for bulk account claims.

Hashing is sha256 with one-byte domain separation: leaves are hashed under
prefix 0x00, interior nodes under 0x01, so a leaf digest can never be
replayed as an interior node or vice versa. Levels with an odd node count
duplicate their last node. A single-leaf tree's root is just that leaf's
digest.

Proofs carry the leaf index plus the sibling digests from leaf to root.
Serialized form: leaf index as u32, sibling count as u16, then the 32-byte
digests in leaf-to-root order (integers little-endian).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import CodecError, InvalidParameter

DIGEST_SIZE = 32
_LEAF_PREFIX = b"\x00"
_NODE_PREFIX = b"\x01"


def leaf_hash(address: str) -> bytes:
    return hashlib.sha256(_LEAF_PREFIX + address.encode("utf-8")).digest()


def node_hash(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(_NODE_PREFIX + left + right).digest()


def _levels(addresses: list[str]) -> list[list[bytes]]:
    if not addresses:
        raise InvalidParameter("cannot build a tree over zero leaves")
    level = [leaf_hash(a) for a in addresses]
    levels = [level]
    while len(level) > 1:
        if len(level) % 2:
            level = level + [level[-1]]
        level = [node_hash(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        levels.append(level)
    return levels


def merkle_root(addresses: list[str]) -> bytes:
    return _levels(addresses)[-1][0]


@dataclass(frozen=True)
class MerkleProof:
    leaf_index: int
    siblings: tuple[bytes, ...]

    def to_bytes(self) -> bytes:
        out = bytearray(self.leaf_index.to_bytes(4, "little"))
        out += len(self.siblings).to_bytes(2, "little")
        for sib in self.siblings:
            out += sib
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "MerkleProof":
        if len(data) < 6:
            raise CodecError("proof shorter than its fixed header")
        leaf_index = int.from_bytes(data[0:4], "little")
        count = int.from_bytes(data[4:6], "little")
        if len(data) != 6 + count * DIGEST_SIZE:
            raise CodecError("proof length does not match sibling count")
        sibs = tuple(
            bytes(data[6 + i * DIGEST_SIZE : 6 + (i + 1) * DIGEST_SIZE]) for i in range(count)
        )
        return cls(leaf_index, sibs)


def merkle_prove(addresses: list[str], leaf_index: int) -> MerkleProof:
    """Produce the sibling path for one leaf of the given list."""
    if not 0 <= leaf_index < len(addresses):
        raise InvalidParameter(f"leaf index {leaf_index} out of range")
    levels = _levels(addresses)
    siblings = []
    idx = leaf_index
    for level in levels[:-1]:
        sib = idx ^ 1
        # Odd tail: the node is paired with a copy of itself.
        siblings.append(level[sib] if sib < len(level) else level[idx])
        idx >>= 1
    return MerkleProof(leaf_index, tuple(siblings))


def merkle_verify(root: bytes, address: str, proof: MerkleProof) -> bool:
    """Check a proof against a root; orientation comes from the index bits.

    The index must be fully consumed by the walk (no bits beyond the tree
    depth), which makes any bit flip in the index detectable even for a
    single-leaf tree.
    """
    node = leaf_hash(address)
    idx = proof.leaf_index
    if idx < 0:
        return False
    for sib in proof.siblings:
        if len(sib) != DIGEST_SIZE:
            return False
        node = node_hash(node, sib) if idx & 1 == 0 else node_hash(sib, node)
        idx >>= 1
    return idx == 0 and node == root
