"""Shared fixtures: bounded message universes and seeded generators."""

from __future__ import annotations

import random
from itertools import product

from protoscope.terms import Atom, Concat, Encrypt, Key, KeySpace, Message


def standard_keyspace() -> tuple[KeySpace, list[Key]]:
    """Two public/private pairs: the acceptance-scale key universe."""
    ks = KeySpace()
    ka, ka_inv = ks.add_pair("ka", "ka_inv")
    kb, kb_inv = ks.add_pair("kb", "kb_inv")
    return ks, [ka, ka_inv, kb, kb_inv]


def password_keyspace() -> tuple[KeySpace, Key]:
    ks = KeySpace()
    pa = ks.add_symmetric("pa")
    return ks, pa


ATOM_IDS = ("a1", "a2", "a3")


def leaves(keys: list[Key]) -> list[Message]:
    return [Atom(a) for a in ATOM_IDS] + list(keys)


def universe_up_to(depth: int, keys: list[Key]) -> list[Message]:
    """Every message of tree height <= depth over three atoms and the given
    keys.  Height 1 is the leaves."""
    layers: list[list[Message]] = [leaves(keys)]
    for _ in range(depth - 1):
        prev = [m for layer in layers for m in layer]
        new: list[Message] = []
        for left, right in product(prev, prev):
            new.append(Concat(left, right))
        for body in prev:
            for key in keys:
                new.append(Encrypt(body, key))
        layers.append(new)
    seen: set[Message] = set()
    out: list[Message] = []
    for layer in layers:
        for m in layer:
            if m not in seen:
                seen.add(m)
                out.append(m)
    return out


def random_message(rng: random.Random, depth: int, keys: list[Key]) -> Message:
    if depth <= 1 or rng.random() < 0.3:
        return rng.choice(leaves(keys))
    if rng.random() < 0.5:
        return Concat(
            random_message(rng, depth - 1, keys), random_message(rng, depth - 1, keys)
        )
    return Encrypt(random_message(rng, depth - 1, keys), rng.choice(keys))
