"""Embedding extraction: provider contract, mean pooling, batch builds, store.

A provider turns one prompt into a matrix of per-token hidden states; the
node's representation is the arithmetic mean over the token axis. Three
providers are included: a remote client speaking a small JSON protocol, a
deterministic hash-based mock for tests, and a random-Fourier-feature
provider that embeds the coordinate itself and stands in for a smooth
spatial signal at desk scale.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import numpy as np
import requests

from .errors import (
    BadMagic,
    ChecksumMismatch,
    DimMismatch,
    EmptyTokenMatrix,
    GeovecError,
    OddDimension,
    ProviderUnavailable,
    TruncatedFile,
    VersionMismatch,
)
from .geo import Coordinate, NodeSet
from .prompts import Prompt, PromptVariant

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

STORE_MAGIC = b"GVEC"
STORE_VERSION = 1


class EmbeddingProvider(Protocol):
    """Anything that yields per-token last-layer states for a prompt."""

    id: str
    dim: int

    def token_states(self, prompt: Prompt) -> np.ndarray: ...


@dataclass(frozen=True)
class GeoRepresentation:
    """One embedding column per node, plus provenance."""

    node_ids: tuple[str, ...]
    matrix: np.ndarray
    provider_id: str
    variant: PromptVariant
    prompt_hash: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2:
            raise ValueError("representation matrix must be 2-D (dim x nodes)")
        if m.shape[1] != len(self.node_ids):
            raise ValueError(
                f"matrix has {m.shape[1]} columns for {len(self.node_ids)} node ids"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("representation matrix must be finite")

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_nodes(self) -> int:
        return int(self.matrix.shape[1])

    def column(self, node_id: str) -> np.ndarray:
        return self.matrix[:, self.node_ids.index(node_id)]


def mean_pool(tokens: np.ndarray) -> np.ndarray:
    """Arithmetic mean over the token axis of a T x M state matrix."""
    tokens = np.asarray(tokens, dtype=float)
    if tokens.ndim != 2 or tokens.shape[0] == 0:
        raise EmptyTokenMatrix(f"expected a non-empty T x M matrix, got shape {tokens.shape}")
    return tokens.mean(axis=0)


def _fnv1a64(data: bytes, h: int = _FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _hash64(seed: int, token: str) -> int:
    h = _FNV_OFFSET ^ (seed & _MASK64)
    h = (h * _FNV_PRIME) & _MASK64
    return _fnv1a64(token.encode("utf-8"), h)


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z, state


def mock_token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic pseudo-random vector in [-1, 1] for one token.

    Pure integer arithmetic (FNV-1a keyed by seed, expanded through a
    splitmix-style generator), so the output is bit-stable across
    platforms and processes.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    state = _hash64(seed, token)
    out = np.empty(dim)
    for j in range(dim):
        z, state = _splitmix64(state)
        out[j] = (z >> 11) * 2.0 ** -53 * 2.0 - 1.0
    return out


class MockProvider:
    """Whitespace tokenizer plus hash-derived token states; test workhorse."""

    def __init__(self, dim: int = 16, seed: int = 0, id: str | None = None) -> None:
        self.dim = dim
        self.seed = seed
        self.id = id or f"mock-{dim}-{seed}"
        self._cache: dict[str, np.ndarray] = {}

    def token_states(self, prompt: Prompt) -> np.ndarray:
        tokens = prompt.text.split()
        if not tokens:
            raise EmptyTokenMatrix("prompt text has no tokens")
        rows = []
        for tok in tokens:
            vec = self._cache.get(tok)
            if vec is None:
                vec = mock_token_vector(tok, self.dim, self.seed)
                self._cache[tok] = vec
            rows.append(vec)
        return np.stack(rows)


def rff_embed(coord: Coordinate, dim: int, seed: int, lengthscale_deg: float = 10.0) -> np.ndarray:
    """Random Fourier features of (lon, lat) approximating an RBF kernel.

    dim must be even: dim/2 frequency pairs are drawn once from
    Normal(0, 1/lengthscale^2) and each contributes a cosine and a sine,
    scaled by sqrt(2/dim) so the vector has unit norm.
    """
    freqs = _rff_frequencies(dim, seed, lengthscale_deg)
    args = freqs @ np.array([coord.lon, coord.lat])
    scale = math.sqrt(2.0 / dim)
    return np.concatenate([np.cos(args), np.sin(args)]) * scale


def _rff_frequencies(dim: int, seed: int, lengthscale_deg: float) -> np.ndarray:
    if dim < 2 or dim % 2 != 0:
        raise OddDimension(f"random Fourier features need an even dim >= 2, got {dim}")
    if lengthscale_deg <= 0:
        raise ValueError("lengthscale_deg must be positive")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0 / lengthscale_deg, size=(dim // 2, 2))


class RffProvider:
    """Coordinate-based provider: one 'token' holding the RFF vector."""

    def __init__(
        self,
        dim: int = 256,
        seed: int = 0,
        lengthscale_deg: float = 10.0,
        id: str | None = None,
    ) -> None:
        self._freqs = _rff_frequencies(dim, seed, lengthscale_deg)
        self.dim = dim
        self.seed = seed
        self.lengthscale_deg = lengthscale_deg
        self.id = id or f"rff-{dim}-{seed}"

    def token_states(self, prompt: Prompt) -> np.ndarray:
        coord = prompt.coord
        args = self._freqs @ np.array([coord.lon, coord.lat])
        scale = math.sqrt(2.0 / self.dim)
        row = np.concatenate([np.cos(args), np.sin(args)]) * scale
        return row[np.newaxis, :]


class RemoteProvider:
    """Client for the token-embedding wire protocol.

    POSTs ``{"model": id, "text": prompt}`` to ``<base_url>/token_embeddings``
    and expects ``{"dim": M, "tokens": T, "states": [[...]; T]}`` back.
    Transient failures are retried up to ``retries`` times with exponential
    backoff before ProviderUnavailable is raised.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        dim: int,
        session: requests.Session | None = None,
        retries: int = 3,
        backoff_s: float = 0.5,
        sleep=None,
        timeout_s: float = 60.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.id = model
        self.dim = dim
        self.session = session or requests.Session()
        self.retries = retries
        self.backoff_s = backoff_s
        self._sleep = sleep if sleep is not None else time.sleep
        self.timeout_s = timeout_s

    def token_states(self, prompt: Prompt) -> np.ndarray:
        url = self.base_url + "/token_embeddings"
        payload = {"model": self.id, "text": prompt.text}
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt > 0:
                self._sleep(self.backoff_s * 2.0 ** (attempt - 1))
            try:
                resp = self.session.post(url, json=payload, timeout=self.timeout_s)
            except requests.RequestException as e:
                last_error = e
                continue
            if resp.status_code >= 500:
                last_error = ProviderUnavailable(f"{url} returned HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ProviderUnavailable(f"{url} returned HTTP {resp.status_code}")
            return self._parse(resp)
        raise ProviderUnavailable(f"{url} unreachable after {self.retries + 1} attempts: {last_error}")

    def _parse(self, resp: requests.Response) -> np.ndarray:
        doc = resp.json()
        if doc.get("dim") != self.dim:
            raise DimMismatch(f"provider {self.id} declared dim {self.dim}, returned {doc.get('dim')}")
        states = np.asarray(doc.get("states", []), dtype=float)
        if states.ndim != 2 or states.shape != (doc.get("tokens"), self.dim):
            raise DimMismatch(
                f"states shape {states.shape} does not match tokens={doc.get('tokens')}, dim={self.dim}"
            )
        return states


def embed_text(provider: EmbeddingProvider, prompt: Prompt) -> np.ndarray:
    """Mean-pooled last-layer states for one prompt."""
    if not prompt.text:
        raise EmptyTokenMatrix("cannot embed an empty prompt")
    vec = mean_pool(provider.token_states(prompt))
    if vec.shape != (provider.dim,):
        raise DimMismatch(f"provider {provider.id} returned length {vec.shape}, declared {provider.dim}")
    return vec


def hash_prompts(prompts: list[Prompt]) -> str:
    h = hashlib.sha256()
    for p in prompts:
        h.update(p.text.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


PromptSource = Callable[[str, Coordinate], Prompt]


def instruction_only_source(variant: PromptVariant) -> PromptSource:
    """Prompt source that needs no map data (instruction-only variants)."""
    from .prompts import build_prompt

    def source(node_id: str, coord: Coordinate) -> Prompt:
        return build_prompt(variant, coord)

    return source


def osm_prompt_source(client, variant: PromptVariant, radius_km: float = 100.0) -> PromptSource:
    """Prompt source backed by an OsmClient, fetching what the variant needs."""
    from .prompts import INSTRUCTION_ONLY, build_prompt

    def source(node_id: str, coord: Coordinate) -> Prompt:
        if variant.kind == INSTRUCTION_ONLY:
            return build_prompt(variant, coord)
        geocode = client.reverse_geocode(coord)
        places = None
        if variant.k is not None:
            places = client.nearby_places(coord, radius_km=radius_km, k=variant.k)
        return build_prompt(variant, coord, geocode=geocode, places=places)

    return source


def build_geovec(
    nodes: NodeSet,
    provider: EmbeddingProvider,
    variant: PromptVariant,
    prompt_source: PromptSource,
    workers: int = 1,
) -> GeoRepresentation:
    """Embed every node; columns follow the node order regardless of workers.

    Any per-node failure aborts the whole build with the node id attached,
    so a representation is either complete or absent.
    """

    def one(item: tuple[str, Coordinate]) -> tuple[Prompt, np.ndarray]:
        node_id, coord = item
        try:
            prompt = prompt_source(node_id, coord)
            return prompt, embed_text(provider, prompt)
        except GeovecError as e:
            raise type(e)(f"node {node_id}: {e}") from e

    items = list(zip(nodes.ids, nodes.coords))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(item) for item in items]
    prompts = [r[0] for r in results]
    matrix = np.stack([r[1] for r in results], axis=1)
    return GeoRepresentation(
        node_ids=nodes.ids,
        matrix=matrix,
        provider_id=provider.id,
        variant=variant,
        prompt_hash=hash_prompts(prompts),
    )


# -- binary store -------------------------------------------------------------
#
# Layout (little-endian): magic "GVEC", u32 version, u32 N, u32 M,
# u32 metadata length, metadata JSON, N*M float32 column-major (one column
# per node), u64 FNV-1a checksum over all preceding bytes.


def save_store(rep: GeoRepresentation, path: str | Path) -> None:
    """Write a representation; the file appears atomically or not at all."""
    meta = {
        "provider_id": rep.provider_id,
        "variant": rep.variant.label(),
        "prompt_hash": rep.prompt_hash,
        "node_ids": list(rep.node_ids),
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    n, m = rep.n_nodes, rep.dim
    payload = bytearray()
    payload += STORE_MAGIC
    payload += struct.pack("<IIII", STORE_VERSION, n, m, len(meta_bytes))
    payload += meta_bytes
    payload += rep.matrix.astype("<f4").flatten(order="F").tobytes()
    payload += struct.pack("<Q", _fnv1a64(bytes(payload)))
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(bytes(payload))
    tmp.replace(path)


def load_store(path: str | Path) -> GeoRepresentation:
    """Read a representation saved by save_store, verifying the checksum."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != STORE_MAGIC:
        raise BadMagic(f"{path}: not an embedding store")
    if len(raw) < 20:
        raise TruncatedFile(f"{path}: header incomplete")
    version, n, m, meta_len = struct.unpack("<IIII", raw[4:20])
    if version != STORE_VERSION:
        raise VersionMismatch(f"{path}: store version {version}, expected {STORE_VERSION}")
    matrix_off = 20 + meta_len
    checksum_off = matrix_off + n * m * 4
    if len(raw) < checksum_off + 8:
        raise TruncatedFile(f"{path}: expected {checksum_off + 8} bytes, found {len(raw)}")
    (stored_sum,) = struct.unpack("<Q", raw[checksum_off : checksum_off + 8])
    if _fnv1a64(raw[:checksum_off]) != stored_sum:
        raise ChecksumMismatch(f"{path}: checksum does not match contents")
    meta = json.loads(raw[20:matrix_off].decode("utf-8"))
    flat = np.frombuffer(raw[matrix_off:checksum_off], dtype="<f4")
    matrix = flat.reshape((m, n), order="F").astype(float)
    return GeoRepresentation(
        node_ids=tuple(meta["node_ids"]),
        matrix=matrix,
        provider_id=meta["provider_id"],
        variant=PromptVariant.from_label(meta["variant"]),
        prompt_hash=meta["prompt_hash"],
    )
