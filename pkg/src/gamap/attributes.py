"""Target-object attribute generation: prompt templates, parsing, fixture lookup.

Attribute channels are ordered geometric-first, then affordance. That order
is load-bearing: score images, map channels and heatmap exports all index
channels the same way.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

SYSTEM_PROMPT = ("I am a highly intelligent question-answering bot, and I answer "
                 "questions from a human perspective.")

_AFFORDANCE_TEMPLATE = ("For the target object {target}, please provide {n} affordance "
                        "attributes that to the most reflect its characteristics.")

_GEOMETRIC_TEMPLATE = ("Summarize {n} geometric part visual features of the {target} "
                       "which are typically used to identify why it is a {target}.")


class AttributeGenError(Exception):
    pass


class EmptyTarget(AttributeGenError):
    pass


class PromptCountError(AttributeGenError):
    pass


class CountMismatch(AttributeGenError):
    pass


class EmptyResponse(AttributeGenError):
    pass


class UnknownCategory(AttributeGenError):
    pass


def build_affordance_prompt(target: str, n: int) -> str:
    if not target:
        raise EmptyTarget("target object name is empty")
    if n < 1:
        raise PromptCountError(f"need at least 1 affordance attribute, got {n}")
    return _AFFORDANCE_TEMPLATE.format(target=target, n=n)


def build_geometric_prompt(target: str, n: int) -> str:
    if not target:
        raise EmptyTarget("target object name is empty")
    if n < 1:
        raise PromptCountError(f"need at least 1 geometric attribute, got {n}")
    return _GEOMETRIC_TEMPLATE.format(target=target, n=n)


_ITEM_PREFIX = re.compile(r"^\s*(?:\d+[.)]\s*|[-*•]\s*)")


def parse_attribute_list(raw: str, expected: int) -> list[str]:
    """Normalize a free-form enumerated response into exactly `expected` items.

    Strips leading numbering / bullet markers, trims, lowercases, drops blanks.
    """
    if not raw or not raw.strip():
        raise EmptyResponse("attribute response is empty")
    items = []
    for line in raw.splitlines():
        cleaned = _ITEM_PREFIX.sub("", line).strip().lower()
        if cleaned:
            items.append(cleaned)
    if len(items) != expected:
        raise CountMismatch(f"expected {expected} attributes, parsed {len(items)}: {items}")
    return items


@dataclass(frozen=True)
class AttributeSet:
    """Geometric-part and affordance attribute strings for one target category."""

    target: str
    geometric: tuple[str, ...]
    affordance: tuple[str, ...]

    def __post_init__(self):
        if not self.target:
            raise EmptyTarget("target object name is empty")
        if len(self.geometric) + len(self.affordance) < 1:
            raise AttributeGenError("need at least one attribute channel")
        if any(not a for a in self.geometric + self.affordance):
            raise AttributeGenError("attribute strings must be non-empty")

    @property
    def channels(self) -> tuple[str, ...]:
        """Channel order: geometric parts first, then affordances."""
        return self.geometric + self.affordance

    @property
    def num_channels(self) -> int:
        return len(self.geometric) + len(self.affordance)


class FixtureSource:
    """Offline attribute source backed by per-category files bundled with the package."""

    def __init__(self, root=None):
        self._root = root

    def _load(self, target: str) -> dict:
        name = target.strip().lower().replace(" ", "_") + ".json"
        if self._root is not None:
            path = self._root / name
            if not path.exists():
                raise UnknownCategory(f"no attribute fixture for {target!r} in {self._root}")
            return json.loads(path.read_text())
        ref = resources.files("gamap") / "fixtures" / name
        if not ref.is_file():
            raise UnknownCategory(f"no bundled attribute fixture for {target!r}")
        return json.loads(ref.read_text())

    def fetch(self, target: str, n_g: int, n_a: int):
        data = self._load(target)
        geo, aff = data["geometric"], data["affordance"]
        if len(geo) < n_g or len(aff) < n_a:
            raise CountMismatch(
                f"fixture for {target!r} has {len(geo)} geometric / {len(aff)} affordance "
                f"attributes, requested {n_g}/{n_a}")
        return list(geo[:n_g]), list(aff[:n_a])


def resolve_attributes(target: str, n_g: int, n_a: int, source) -> AttributeSet:
    """Resolve the target's attribute strings through a fixture or remote source."""
    if not target:
        raise EmptyTarget("target object name is empty")
    if n_g < 0 or n_a < 0 or n_g + n_a < 1:
        raise PromptCountError(f"total channel count must be >= 1, got n_g={n_g} n_a={n_a}")
    geo, aff = source.fetch(target, n_g, n_a)
    return AttributeSet(target=target, geometric=tuple(geo), affordance=tuple(aff))


@dataclass
class AttributeEmbeddings:
    """Unit-norm text embeddings per attribute channel, geometric-first order."""

    attrs: AttributeSet
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != self.attrs.num_channels:
            raise ValueError("one embedding row per attribute channel required")
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("attribute embeddings must be unit-norm")

    @classmethod
    def from_provider(cls, attrs: AttributeSet, provider) -> "AttributeEmbeddings":
        vecs = np.asarray(provider.embed_texts(list(attrs.channels)), dtype=np.float64)
        return cls(attrs=attrs, vectors=vecs)

    @property
    def num_channels(self) -> int:
        return self.attrs.num_channels
