"""Deterministic rendering of geolocation prompts.

A prompt has up to three sections, always in this order: an instruction
naming the coordinate, a reverse-geocoded address, and a numbered list of
nearby places with distance, direction and bearing. The place list carries
the strongest geographic signal and deliberately comes last.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MissingSection
from .geo import Coordinate
from .osm import GeocodeResult, PlaceOfInterest

INSTRUCTION_ONLY = "instruction-only"
INSTRUCTION_ADDRESS = "instruction-address"
INSTRUCTION_ADDRESS_TOPK = "instruction-address-topk"

CANONICAL_TOP_KS = (1, 5, 10)
"""The place counts exercised by the standard ablation grid."""

_PLACE_LINE = re.compile(
    r"^(\d+)\. (.+), (\d+\.\d) km, ([A-Za-z]+) \((\d+) degrees\)$"
)


@dataclass(frozen=True)
class PromptVariant:
    """Which sections a prompt includes; TopK variants carry the place count."""

    kind: str
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (INSTRUCTION_ONLY, INSTRUCTION_ADDRESS, INSTRUCTION_ADDRESS_TOPK):
            raise ValueError(f"unknown prompt variant kind {self.kind!r}")
        if self.kind == INSTRUCTION_ADDRESS_TOPK:
            if self.k is None or self.k < 1:
                raise ValueError("top-k variant needs k >= 1")
        elif self.k is not None:
            raise ValueError(f"variant {self.kind} takes no k")

    @property
    def canonical(self) -> bool:
        """True when this variant is one of the standard ablation rows."""
        return self.kind != INSTRUCTION_ADDRESS_TOPK or self.k in CANONICAL_TOP_KS

    def label(self) -> str:
        if self.kind == INSTRUCTION_ADDRESS_TOPK:
            return f"instruction-address-top{self.k}"
        return self.kind

    @classmethod
    def from_label(cls, label: str) -> "PromptVariant":
        if label == INSTRUCTION_ONLY:
            return cls(INSTRUCTION_ONLY)
        if label == INSTRUCTION_ADDRESS:
            return cls(INSTRUCTION_ADDRESS)
        m = re.fullmatch(r"(?:instruction-address-)?top-?(\d+)", label)
        if m:
            return cls(INSTRUCTION_ADDRESS_TOPK, k=int(m.group(1)))
        raise ValueError(f"cannot parse prompt variant {label!r}")


def instruction_only() -> PromptVariant:
    return PromptVariant(INSTRUCTION_ONLY)


def instruction_address() -> PromptVariant:
    return PromptVariant(INSTRUCTION_ADDRESS)


def instruction_address_topk(k: int) -> PromptVariant:
    return PromptVariant(INSTRUCTION_ADDRESS_TOPK, k=k)


@dataclass(frozen=True)
class Prompt:
    """Rendered prompt text plus the inputs that identify it."""

    variant: PromptVariant
    text: str
    coord: Coordinate


def select_top_k(places: list[PlaceOfInterest], k: int) -> list[PlaceOfInterest]:
    """First min(k, len(places)) entries of a distance-sorted place list."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return list(places[:k])


def format_coord(coord: Coordinate) -> str:
    """Fixed 4-decimal "(lat, lon)" rendering used in the instruction line."""
    return f"({coord.lat:.4f}, {coord.lon:.4f})"


def format_place_line(index: int, place: PlaceOfInterest) -> str:
    bearing = int(round(place.bearing_deg)) % 360
    return (
        f"{index}. {place.name}, {place.distance_km:.1f} km, "
        f"{place.direction} ({bearing} degrees)"
    )


def parse_place_line(line: str) -> tuple[int, str, float, str, int]:
    """Recover (index, name, distance_km, direction, bearing) from a place line."""
    m = _PLACE_LINE.match(line)
    if not m:
        raise ValueError(f"not a place line: {line!r}")
    return (int(m.group(1)), m.group(2), float(m.group(3)), m.group(4), int(m.group(5)))


def build_prompt(
    variant: PromptVariant,
    coord: Coordinate,
    geocode: GeocodeResult | None = None,
    places: list[PlaceOfInterest] | None = None,
) -> Prompt:
    """Render the canonical prompt for a coordinate.

    Every line ends with a newline and carries no trailing whitespace, so
    the text of a smaller variant is a byte prefix of every larger one
    built from the same inputs.

    Raises MissingSection when the variant needs a geocode or place list
    that was not supplied.
    """
    lines = [
        "Describe the geographic, economic, and social characteristics "
        f"of the location at coordinates {format_coord(coord)}."
    ]
    if variant.kind in (INSTRUCTION_ADDRESS, INSTRUCTION_ADDRESS_TOPK):
        if geocode is None:
            raise MissingSection(f"variant {variant.label()} needs a geocode result")
        lines.append(f"Address: {geocode.display}")
    if variant.kind == INSTRUCTION_ADDRESS_TOPK:
        if places is None:
            raise MissingSection(f"variant {variant.label()} needs nearby places")
        lines.append("Nearby Places:")
        for i, place in enumerate(select_top_k(places, variant.k), start=1):
            lines.append(format_place_line(i, place))
    text = "".join(line + "\n" for line in lines)
    return Prompt(variant=variant, text=text, coord=coord)
