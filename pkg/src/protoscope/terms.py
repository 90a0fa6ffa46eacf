"""Free message algebra for symbolic protocol analysis.

Messages are atoms, keys, pairs (concatenation), or encryptions.  The
algebra is free: two messages are equal exactly when they are built the
same way, and every message exposes which of the four shapes it has.
All values are immutable and hashable, so they can be shared freely
between concurrent evaluation contexts.
"""

from __future__ import annotations

import re
from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional


class KeyKind(str, Enum):
    SYMMETRIC = "symmetric"
    PUBLIC = "public"
    PRIVATE = "private"


class Message:
    """Base class for the four message shapes. Never instantiated directly."""

    __slots__ = ("_hash",)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {render_message(self)}>"

    def __str__(self) -> str:
        return render_message(self)


class Atom(Message):
    """An opaque plaintext symbol: a nonce, an agent name, a key bit, ..."""

    __slots__ = ("id",)

    def __init__(self, id: str):
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "_hash", hash(("atom", id)))

    def __setattr__(self, name, value):  # immutable
        raise AttributeError("Atom is immutable")

    def __eq__(self, other) -> bool:
        return type(other) is Atom and self.id == other.id

    __hash__ = Message.__hash__


class Key(Message):
    """A key symbol. Inverses live in the KeySpace, not on the key itself."""

    __slots__ = ("id", "kind")

    def __init__(self, id: str, kind: KeyKind = KeyKind.SYMMETRIC):
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "kind", KeyKind(kind))
        object.__setattr__(self, "_hash", hash(("key", id)))

    def __setattr__(self, name, value):
        raise AttributeError("Key is immutable")

    def __eq__(self, other) -> bool:
        return type(other) is Key and self.id == other.id and self.kind == other.kind

    __hash__ = Message.__hash__


class Concat(Message):
    __slots__ = ("left", "right")

    def __init__(self, left: Message, right: Message):
        if not isinstance(left, Message) or not isinstance(right, Message):
            raise TypeError("Concat parts must be messages")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "_hash", hash(("conc", left._hash, right._hash)))

    def __setattr__(self, name, value):
        raise AttributeError("Concat is immutable")

    def __eq__(self, other) -> bool:
        return (
            type(other) is Concat
            and self._hash == other._hash
            and self.left == other.left
            and self.right == other.right
        )

    __hash__ = Message.__hash__


class Encrypt(Message):
    __slots__ = ("body", "key")

    def __init__(self, body: Message, key: Key):
        if not isinstance(body, Message):
            raise TypeError("Encrypt body must be a message")
        if not isinstance(key, Key):
            raise TypeError("Encrypt key must be a Key")
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "_hash", hash(("enc", body._hash, key._hash)))

    def __setattr__(self, name, value):
        raise AttributeError("Encrypt is immutable")

    def __eq__(self, other) -> bool:
        return (
            type(other) is Encrypt
            and self._hash == other._hash
            and self.body == other.body
            and self.key == other.key
        )

    __hash__ = Message.__hash__


class KeySpaceError(ValueError):
    pass


class KeySpace:
    """The key universe of a scenario plus its inverse map.

    The inverse map is a total involution: symmetric keys are self-inverse,
    public/private keys are declared in pairs and invert each other.
    """

    def __init__(self):
        self._keys: dict[str, Key] = {}
        self._inverse: dict[str, str] = {}

    def add_symmetric(self, key_id: str) -> Key:
        key = Key(key_id, KeyKind.SYMMETRIC)
        self._register(key)
        self._inverse[key_id] = key_id
        return key

    def add_pair(self, public_id: str, private_id: str) -> tuple[Key, Key]:
        if public_id == private_id:
            raise KeySpaceError(f"public and private key ids must differ: {public_id!r}")
        pub = Key(public_id, KeyKind.PUBLIC)
        priv = Key(private_id, KeyKind.PRIVATE)
        self._register(pub)
        self._register(priv)
        self._inverse[public_id] = private_id
        self._inverse[private_id] = public_id
        return pub, priv

    def _register(self, key: Key) -> None:
        if key.id in self._keys:
            raise KeySpaceError(f"key {key.id!r} already declared")
        self._keys[key.id] = key

    def get(self, key_id: str) -> Optional[Key]:
        return self._keys.get(key_id)

    def __contains__(self, key_id: str) -> bool:
        return key_id in self._keys

    def inverse(self, key: Key) -> Key:
        try:
            return self._keys[self._inverse[key.id]]
        except KeyError:
            raise KeySpaceError(f"key {key.id!r} not in this keyspace") from None

    def all_keys(self) -> tuple[Key, ...]:
        return tuple(self._keys[k] for k in sorted(self._keys))


def conc(m1: Message, m2: Message) -> Concat:
    return Concat(m1, m2)


def encr(m: Message, k: Key) -> Encrypt:
    return Encrypt(m, k)


def first(m: Message) -> Message:
    if not isinstance(m, Concat):
        raise ValueError("first() applies only to concatenations")
    return m.left


def second(m: Message) -> Message:
    if not isinstance(m, Concat):
        raise ValueError("second() applies only to concatenations")
    return m.right


def decr(m: Message, k: Key, keys: KeySpace) -> Optional[Message]:
    """Decrypt ``m`` with ``k``; None when ``m`` is not a matching ciphertext.

    A None result signals "wrong key or not a ciphertext" rather than an
    error: callers probe ciphertexts without knowing what is inside.
    """
    if isinstance(m, Encrypt) and keys.inverse(m.key) == k:
        return m.body
    return None


def submessage(m1: Message, m2: Message) -> bool:
    """The could-be-used-to-build relation.

    m1 is a submessage of m2 when m1 equals m2, occurs in either half of a
    concatenation, or occurs in the body of an encryption.  The key slot of
    an encryption is deliberately not descended into: a ciphertext does not
    carry its key.
    """
    if m1 == m2:
        return True
    if isinstance(m2, Concat):
        return submessage(m1, m2.left) or submessage(m1, m2.right)
    if isinstance(m2, Encrypt):
        return submessage(m1, m2.body)
    return False


@lru_cache(maxsize=None)
def submessages(m: Message) -> frozenset[Message]:
    """All submessages of ``m``, i.e. {x : submessage(x, m)}."""
    if isinstance(m, Concat):
        return submessages(m.left) | submessages(m.right) | {m}
    if isinstance(m, Encrypt):
        return submessages(m.body) | {m}
    return frozenset((m,))


def message_depth(m: Message) -> int:
    """Tree height: atoms and keys have depth 1."""
    if isinstance(m, Concat):
        return 1 + max(message_depth(m.left), message_depth(m.right))
    if isinstance(m, Encrypt):
        return 1 + max(message_depth(m.body), 1)
    return 1


# --- textual grammar ------------------------------------------------------
#
#   msg := IDENT | "pair(" msg "," msg ")" | "enc(" msg "," IDENT ")"
#
# IDENT matches [A-Za-z][A-Za-z0-9_]*.  Key identifiers must be declared in
# the keyspace; every other identifier is an atom.  Rendering produces the
# same grammar with no whitespace, and parse(render(m)) == m.

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


class MessageParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.reason = message
        self.position = position


class UnknownIdentifierError(MessageParseError):
    pass


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise MessageParseError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def ident(self) -> tuple[str, int]:
        self.skip_ws()
        m = IDENT_RE.match(self.text, self.pos)
        if not m:
            raise MessageParseError("expected identifier", self.pos)
        self.pos = m.end()
        return m.group(), m.start()

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def parse_message(
    text: str,
    keys: KeySpace,
    atoms: Optional[Iterable[str]] = None,
) -> Message:
    """Parse the textual grammar into a message.

    When ``atoms`` is given, bare identifiers must be declared there (or be
    keys); otherwise any non-key identifier becomes an atom.
    """
    atom_set = None if atoms is None else set(atoms)
    scanner = _Scanner(text)
    msg = _parse_term(scanner, keys, atom_set)
    if not scanner.at_end():
        raise MessageParseError("trailing input after message", scanner.pos)
    return msg


def _parse_term(s: _Scanner, keys: KeySpace, atoms: Optional[set[str]]) -> Message:
    name, start = s.ident()
    if name == "pair" and s.peek() == "(":
        s.expect("(")
        left = _parse_term(s, keys, atoms)
        s.expect(",")
        right = _parse_term(s, keys, atoms)
        s.expect(")")
        return Concat(left, right)
    if name == "enc" and s.peek() == "(":
        s.expect("(")
        body = _parse_term(s, keys, atoms)
        s.expect(",")
        key_name, key_start = s.ident()
        key = keys.get(key_name)
        if key is None:
            raise UnknownIdentifierError(f"unknown key {key_name!r}", key_start)
        s.expect(")")
        return Encrypt(body, key)
    key = keys.get(name)
    if key is not None:
        return key
    if atoms is not None and name not in atoms:
        raise UnknownIdentifierError(f"unknown identifier {name!r}", start)
    return Atom(name)


def render_message(m: Message) -> str:
    if isinstance(m, Atom):
        return m.id
    if isinstance(m, Key):
        return m.id
    if isinstance(m, Concat):
        return f"pair({render_message(m.left)},{render_message(m.right)})"
    if isinstance(m, Encrypt):
        return f"enc({render_message(m.body)},{m.key.id})"
    raise TypeError(f"not a message: {m!r}")
