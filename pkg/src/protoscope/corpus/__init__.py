"""Shipped scenarios with their expected verdicts."""

from __future__ import annotations

from importlib import resources


class UnknownCorpusError(KeyError):
    def __init__(self, name: str, available: list[str]):
        super().__init__(f"unknown corpus scenario {name!r}; available: {', '.join(available)}")
        self.name = name
        self.available = available


def corpus_names() -> list[str]:
    files = resources.files(__package__)
    return sorted(p.name[: -len(".scn")] for p in files.iterdir() if p.name.endswith(".scn"))


def corpus_text(name: str) -> str:
    names = corpus_names()
    if name not in names:
        raise UnknownCorpusError(name, names)
    return resources.files(__package__).joinpath(f"{name}.scn").read_text(encoding="utf-8")
