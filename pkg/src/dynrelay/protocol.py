"""Per-node state machines for Byzantine-resilient reliable broadcast.

Two variants share one :class:`NodeState`:

``noncrypto``
    Records are ``(source, payload, visited)``.  A relay from ``v`` appends
    ``v`` to ``visited`` unless ``v`` is already there.  ``(s, m)`` is
    accepted once the visited sets of its records (minus ``s``) cannot all
    be hit by ``k`` nodes.

``crypto``
    Records are ``(source, blob)`` with ``blob`` signed by ``source``.
    Records are flooded unchanged and accepted as soon as the signature of
    the claimed source verifies.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from typing import Callable, Iterable, NamedTuple, Protocol

from .cut import min_cut_exceeds
from .tvg import NodeId

NONCRYPTO = "noncrypto"
CRYPTO = "crypto"


class TupleRecord(NamedTuple):
    source: NodeId
    payload: bytes
    visited: frozenset = frozenset()


class SignedRecord(NamedTuple):
    source: NodeId
    blob: bytes


class AuthProvider(Protocol):
    def sign(self, signer: NodeId, m: bytes) -> bytes: ...

    def verify(self, claimed: NodeId, blob: bytes) -> bytes | None: ...


class HmacAuth:
    """Keyed-MAC stand-in for signatures.

    Keys are derived from a master secret the provider never exposes.
    Byzantine code must only be handed :meth:`signer_for` of its own id.
    """

    TAG = 32

    def __init__(self, secret: bytes = b"dynrelay"):
        self._secret = secret
        self._keys: dict = {}

    def _key(self, node: NodeId) -> bytes:
        key = self._keys.get(node)
        if key is None:
            key = hmac.new(self._secret, repr(node).encode(), hashlib.sha256).digest()
            self._keys[node] = key
        return key

    def sign(self, signer: NodeId, m: bytes) -> bytes:
        return bytes(m) + hmac.new(self._key(signer), m, hashlib.sha256).digest()

    def verify(self, claimed: NodeId, blob: bytes) -> bytes | None:
        if not isinstance(blob, (bytes, bytearray)) or len(blob) < self.TAG:
            return None
        m, tag = bytes(blob[: -self.TAG]), blob[-self.TAG :]
        good = hmac.new(self._key(claimed), m, hashlib.sha256).digest()
        return m if hmac.compare_digest(good, tag) else None

    def signer_for(self, node: NodeId) -> Callable[[bytes], bytes]:
        return lambda m: self.sign(node, m)


class NodeState:
    """Omega (records received), Acc (accepted pairs) and the rules acting on them."""

    def __init__(self, node: NodeId, k: int, mode: str = NONCRYPTO, auth: AuthProvider | None = None):
        if mode not in (NONCRYPTO, CRYPTO):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == CRYPTO and auth is None:
            raise ValueError("crypto mode needs an auth provider")
        if k < 0:
            raise ValueError("k must be non-negative")
        self.node = node
        self.k = k
        self.mode = mode
        self.auth = auth
        self.m0: bytes | None = None
        self.omega: set = set()
        self.acc: set[tuple[NodeId, bytes]] = set()
        self.malformed = 0
        # (source, payload) -> inclusion-minimal candidate sets
        self._candidates: dict[tuple, list[frozenset]] = {}
        self._seen: dict[NodeId, set] = {}

    def start(self, m0: bytes) -> frozenset:
        """Install the node's own message; returns the omega to multicast."""
        if self.m0 is not None:
            raise RuntimeError(f"{self.node!r} already broadcast")
        self.m0 = bytes(m0)
        if self.mode == NONCRYPTO:
            self.omega.add(TupleRecord(self.node, self.m0, frozenset()))
        else:
            self.omega.add(SignedRecord(self.node, self.auth.sign(self.node, self.m0)))
        self.acc.add((self.node, self.m0))
        return self.snapshot()

    def snapshot(self) -> frozenset:
        return frozenset(self.omega)

    def receive(self, sender: NodeId, records: Iterable) -> tuple[bool, set]:
        """Apply an incoming omega from ``sender``; returns (omega changed, new acceptances)."""
        seen = self._seen.setdefault(sender, set())
        if isinstance(records, (set, frozenset)):
            fresh = records - seen
        else:
            fresh = set()
            for rec in records:
                try:
                    if rec not in seen:
                        fresh.add(rec)
                except TypeError:
                    self.malformed += 1
        seen |= fresh
        before = len(self.omega)
        touched: set = set()
        if self.mode == NONCRYPTO:
            for rec in fresh:
                if not _well_formed_tuple(rec):
                    self.malformed += 1
                    continue
                if sender in rec.visited:
                    continue
                new = TupleRecord(rec.source, rec.payload, rec.visited | {sender})
                if new in self.omega:
                    continue
                self.omega.add(new)
                if new.source in new.visited and self._add_candidate(new):
                    touched.add((new.source, new.payload))
        else:
            for rec in fresh:
                if not _well_formed_signed(rec):
                    self.malformed += 1
                    continue
                if rec not in self.omega:
                    self.omega.add(rec)
                    touched.add(rec)
        changed = len(self.omega) != before
        return changed, self.try_accept(touched)

    def _add_candidate(self, rec: TupleRecord) -> bool:
        s = rec.visited - {rec.source}
        sets = self._candidates.setdefault((rec.source, rec.payload), [])
        if any(x <= s for x in sets):
            return False
        sets[:] = [x for x in sets if not s <= x]
        sets.append(s)
        return True

    def try_accept(self, keys: Iterable | None = None) -> set:
        """Rule 3 over the given keys (all keys when None); returns newly accepted pairs."""
        new: set = set()
        if self.mode == NONCRYPTO:
            for key in self._candidates if keys is None else keys:
                if key in self.acc:
                    continue
                sets = self._candidates.get(key)
                if sets and min_cut_exceeds(sets, self.k):
                    new.add(key)
        else:
            records = self.omega if keys is None else keys
            for rec in records:
                m = self.auth.verify(rec.source, rec.blob)
                if m is not None and (rec.source, m) not in self.acc:
                    new.add((rec.source, m))
        self.acc |= new
        return new


def _well_formed_tuple(rec) -> bool:
    return (
        isinstance(rec, TupleRecord)
        and isinstance(rec.payload, bytes)
        and isinstance(rec.visited, frozenset)
    )


def _well_formed_signed(rec) -> bool:
    return isinstance(rec, SignedRecord) and isinstance(rec.blob, bytes)


def init_node(
    node: NodeId, m0: bytes, k: int, mode: str = NONCRYPTO, auth: AuthProvider | None = None
) -> tuple[NodeState, frozenset]:
    state = NodeState(node, k, mode, auth)
    return state, state.start(m0)


def format_record(rec) -> str:
    """Short human-readable rendering, stable across runs."""
    if isinstance(rec, TupleRecord):
        visited = ",".join(sorted(map(str, rec.visited)))
        return f"({rec.source},{_show(rec.payload)},{{{visited}}})"
    if isinstance(rec, SignedRecord):
        body = rec.blob[:-HmacAuth.TAG] if len(rec.blob) >= HmacAuth.TAG else rec.blob
        return f"({rec.source},sig[{_show(body)}]#{rec.blob[-4:].hex()})"
    return repr(rec)


def _show(payload: bytes) -> str:
    try:
        text = payload.decode("ascii")
    except UnicodeDecodeError:
        return "0x" + payload.hex()
    return text if text.isprintable() and "," not in text else "0x" + payload.hex()


# -- wire encoding -----------------------------------------------------------

_ID = struct.Struct(">Q")
_LEN = struct.Struct(">I")


def encode_record(rec, index: dict) -> bytes:
    """Length-prefixed big-endian encoding; node ids go through ``index`` (id -> int)."""
    if isinstance(rec, TupleRecord):
        ids = sorted(index[u] for u in rec.visited)
        return b"".join(
            [_ID.pack(index[rec.source]), _LEN.pack(len(rec.payload)), rec.payload, _LEN.pack(len(ids))]
            + [_ID.pack(i) for i in ids]
        )
    if isinstance(rec, SignedRecord):
        return _ID.pack(index[rec.source]) + _LEN.pack(len(rec.blob)) + rec.blob
    raise TypeError(f"not a record: {rec!r}")


def decode_record(data: bytes, nodes: list, mode: str):
    """Inverse of :func:`encode_record`; ``nodes[i]`` is the id encoded as ``i``."""
    src = nodes[_ID.unpack_from(data, 0)[0]]
    (n,) = _LEN.unpack_from(data, 8)
    body = data[12 : 12 + n]
    if mode == CRYPTO:
        if len(data) != 12 + n:
            raise ValueError("trailing bytes in signed record")
        return SignedRecord(src, body)
    off = 12 + n
    (count,) = _LEN.unpack_from(data, off)
    off += 4
    visited = frozenset(nodes[_ID.unpack_from(data, off + 8 * i)[0]] for i in range(count))
    if len(data) != off + 8 * count:
        raise ValueError("trailing bytes in tuple record")
    return TupleRecord(src, body, visited)


def encode_records(records: Iterable, index: dict) -> bytes:
    """Canonical encoding of a record set: count, then sorted length-prefixed records."""
    parts = sorted(encode_record(r, index) for r in records)
    return _LEN.pack(len(parts)) + b"".join(_LEN.pack(len(p)) + p for p in parts)
