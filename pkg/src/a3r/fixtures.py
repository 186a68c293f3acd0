"""Deterministic synthetic datasets for tests, benchmarks, and the CLI.

Three generators, all seeded:

* modality-gap benchmark: class clusters on the unit sphere for the gallery,
  queries displaced by one shared offset vector (the text/image gap) plus
  noise.  Raw cosine search degrades on it; re-ranking should recover.
* separable sanity set: tight clusters, queries exactly at the centroids,
  so baseline search is already perfect.
* attribute-augmentation fixture: records with held-out slots plus a file
  provider whose embeddings make the true candidate text the strict winner
  at every greedy step.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .augment import AttributeVocabulary, FixtureProvider, candidate_text, save_fixture_provider
from .evaluation import Qrels, qrels_from_labels, save_qrels
from .store import (
    EmbeddingMatrix,
    Manifest,
    SampleRecord,
    _atomic_write_bytes,
    save_embeddings,
    save_manifest,
)

COLORS = (
    "black", "white", "silver", "gray", "red", "blue",
    "green", "yellow", "brown", "orange", "purple",
)
BRANDS = (
    "toyota", "honda", "ford", "chevrolet", "bmw", "audi", "mercedes",
    "volkswagen", "nissan", "hyundai", "kia", "mazda", "subaru", "lexus",
    "volvo", "porsche", "jaguar", "land rover", "jeep", "dodge", "ram",
    "gmc", "buick", "cadillac", "chrysler", "lincoln", "acura", "infiniti",
    "tesla", "mitsubishi", "suzuki", "fiat", "alfa romeo", "ferrari",
    "lamborghini", "maserati", "bentley", "rolls royce", "aston martin",
    "mclaren", "bugatti", "mini", "smart", "opel", "peugeot", "renault",
    "citroen", "skoda", "seat", "dacia", "saab", "genesis", "hummer",
    "pontiac", "saturn", "oldsmobile", "mercury", "plymouth", "daewoo",
    "isuzu", "geo", "scion", "maybach", "lotus", "koenigsegg",
)
TYPES = ("sedan", "suv", "hatchback", "truck", "bus", "van")


def default_vocabulary() -> AttributeVocabulary:
    """11 colors, 65 brands, 6 vehicle types."""
    return AttributeVocabulary(
        slots=("color", "brand", "type"),
        values={"color": COLORS, "brand": BRANDS, "type": TYPES},
    )


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.sqrt((v * v).sum())


def _unit_rows(m: np.ndarray) -> np.ndarray:
    return m / np.sqrt((m * m).sum(axis=1))[:, None]


@dataclass(frozen=True)
class RetrievalFixture:
    queries: EmbeddingMatrix
    query_manifest: Manifest
    gallery: EmbeddingMatrix
    gallery_manifest: Manifest
    qrels: Qrels


def make_modality_gap_fixture(
    seed: int,
    n_classes: int = 10,
    per_class: int = 20,
    dim: int = 64,
    gallery_sigma: float = 0.15,
    offset_norm: float = 0.9,
    query_sigma: float = 0.15,
) -> RetrievalFixture:
    """Gallery clusters plus offset-displaced queries, one query per class.

    Every query shares the same offset vector, mimicking the systematic
    displacement between text and image embeddings; the offset biases raw
    cosine rankings toward offset-aligned gallery items regardless of class.
    """
    rng = np.random.default_rng(seed)
    centroids = _unit_rows(rng.normal(size=(n_classes, dim)))
    offset = offset_norm * _unit(rng.normal(size=dim))

    gallery_rows = []
    gallery_records = []
    for ci in range(n_classes):
        for j in range(per_class):
            row = _unit(centroids[ci] + rng.normal(scale=gallery_sigma, size=dim))
            gallery_rows.append(row)
            gallery_records.append(
                SampleRecord(
                    id=f"g{ci * per_class + j:04d}",
                    image=f"images/g{ci * per_class + j:04d}.jpg",
                    label=f"c{ci:02d}",
                )
            )

    query_rows = []
    query_records = []
    for ci in range(n_classes):
        row = _unit(centroids[ci] + offset + rng.normal(scale=query_sigma, size=dim))
        query_rows.append(row)
        query_records.append(
            SampleRecord(
                id=f"q{ci:03d}",
                text=f"an item of class c{ci:02d}",
                label=f"c{ci:02d}",
            )
        )

    gallery_manifest = Manifest(tuple(gallery_records))
    query_manifest = Manifest(tuple(query_records))
    return RetrievalFixture(
        queries=EmbeddingMatrix(np.asarray(query_rows)),
        query_manifest=query_manifest,
        gallery=EmbeddingMatrix(np.asarray(gallery_rows)),
        gallery_manifest=gallery_manifest,
        qrels=qrels_from_labels(query_manifest, gallery_manifest),
    )


def make_separable_fixture(
    seed: int,
    n_classes: int = 5,
    per_class: int = 12,
    dim: int = 32,
    sigma: float = 0.01,
) -> RetrievalFixture:
    """Tight clusters with queries at the exact centroids: baseline-perfect."""
    rng = np.random.default_rng(seed)
    centroids = _unit_rows(rng.normal(size=(n_classes, dim)))

    gallery_rows = []
    gallery_records = []
    for ci in range(n_classes):
        for j in range(per_class):
            gallery_rows.append(_unit(centroids[ci] + rng.normal(scale=sigma, size=dim)))
            gallery_records.append(
                SampleRecord(id=f"g{ci * per_class + j:04d}", label=f"c{ci:02d}")
            )
    query_records = [
        SampleRecord(id=f"q{ci:03d}", text=f"class c{ci:02d}", label=f"c{ci:02d}")
        for ci in range(n_classes)
    ]
    gallery_manifest = Manifest(tuple(gallery_records))
    query_manifest = Manifest(tuple(query_records))
    return RetrievalFixture(
        queries=EmbeddingMatrix(centroids),
        query_manifest=query_manifest,
        gallery=EmbeddingMatrix(np.asarray(gallery_rows)),
        gallery_manifest=gallery_manifest,
        qrels=qrels_from_labels(query_manifest, gallery_manifest),
    )


# Held-out slot patterns cycled over augmentation-fixture records; () keeps
# one fully specified record in every fixture as the no-op case.
_MISSING_PATTERNS = (
    ("color",),
    ("brand",),
    ("type",),
    ("color", "brand"),
    ("color", "type"),
    ("brand", "type"),
    ("color", "brand", "type"),
    (),
)


@dataclass(frozen=True)
class AugmentFixture:
    manifest: Manifest          # records with held-out slots nulled
    expected: Manifest          # the same records fully augmented
    images: EmbeddingMatrix     # aligned image embeddings
    vocab: AttributeVocabulary
    provider: FixtureProvider   # serves exactly the greedy candidate texts


def make_augment_fixture(
    seed: int,
    n_records: int = 16,
    dim: int = 32,
    vocab: AttributeVocabulary | None = None,
) -> AugmentFixture:
    """Records whose true attribute text strictly wins every greedy step.

    The provider embeds the true candidate at each step as a tiny
    perturbation of the record's image embedding (cosine ~0.99) and every
    decoy as an independent random unit vector, so argmax recovery of the
    held-out values is unambiguous.
    """
    rng = np.random.default_rng(seed)
    vocab = vocab or default_vocabulary()

    records, expected, image_rows = [], [], []
    provider_rows, text_to_row = [], {}

    def provider_add(text: str, row: np.ndarray) -> None:
        if text in text_to_row:
            raise AssertionError(f"fixture text collision: {text!r}")
        text_to_row[text] = len(provider_rows)
        provider_rows.append(row)

    for i in range(n_records):
        base_text = f"a street photo of vehicle {i:03d}"
        image = _unit(rng.normal(size=dim))
        truth = {slot: rng.choice(vocab.values[slot]) for slot in vocab.slots}
        missing = _MISSING_PATTERNS[i % len(_MISSING_PATTERNS)]

        attrs = {
            slot: (None if slot in missing else str(truth[slot]))
            for slot in vocab.slots
        }
        records.append(
            SampleRecord(
                id=f"r{i:03d}",
                text=base_text,
                image=f"images/r{i:03d}.jpg",
                attributes=attrs,
            )
        )
        image_rows.append(image)

        # walk the greedy trajectory, registering every candidate this
        # record will ever ask the provider to embed
        text = base_text
        for slot in vocab.slots:
            if slot not in missing:
                continue
            for value in vocab.values[slot]:
                cand = candidate_text(text, value)
                if value == truth[slot]:
                    emb = _unit(image + 0.03 * rng.normal(size=dim))
                else:
                    emb = _unit(rng.normal(size=dim))
                provider_add(cand, emb)
            text = candidate_text(text, str(truth[slot]))

        filled = {slot: str(truth[slot]) for slot in vocab.slots}
        expected.append(records[-1].with_attributes(text, {**attrs, **{s: filled[s] for s in missing}}))

    matrix = EmbeddingMatrix(np.asarray(provider_rows).reshape(len(provider_rows), dim))
    provider = FixtureProvider(matrix=matrix, text_to_row=dict(text_to_row))
    fixture = AugmentFixture(
        manifest=Manifest(tuple(records)),
        expected=Manifest(tuple(expected)),
        images=EmbeddingMatrix(np.asarray(image_rows)),
        vocab=vocab,
        provider=provider,
    )
    _check_strict_winners(fixture)
    return fixture


def _check_strict_winners(fixture: AugmentFixture) -> None:
    """The construction must make every intended winner a strict argmax."""
    for i, rec in enumerate(fixture.manifest):
        image = fixture.images.row(i).astype(np.float64)
        text = rec.text
        for slot in fixture.vocab.slots:
            if rec.attributes.get(slot) is not None:
                continue
            truth = fixture.expected[i].attributes[slot]
            sims = {}
            for value in fixture.vocab.values[slot]:
                cand = candidate_text(text, value)
                row = fixture.provider.text_to_row[cand]
                sims[value] = float(
                    fixture.provider.matrix.row(row).astype(np.float64) @ image
                )
            best = max(sims.values())
            if sims[truth] < best or sum(1 for s in sims.values() if s == best) != 1:
                raise AssertionError(
                    f"fixture winner not strict for record {rec.id} slot {slot}"
                )
            text = candidate_text(text, truth)


def write_fixture_set(outdir, seed: int) -> dict:
    """Write all three fixtures under ``outdir``; returns the path map."""
    paths = {}

    def retrieval_dir(name: str, fx: RetrievalFixture) -> None:
        d = os.path.join(outdir, name)
        os.makedirs(d, exist_ok=True)
        save_embeddings(fx.gallery, os.path.join(d, "gallery.emb"))
        save_manifest(fx.gallery_manifest, os.path.join(d, "gallery.jsonl"))
        save_embeddings(fx.queries, os.path.join(d, "queries.emb"))
        save_manifest(fx.query_manifest, os.path.join(d, "queries.jsonl"))
        save_qrels(fx.qrels, os.path.join(d, "qrels.jsonl"))
        paths[name] = d

    retrieval_dir("benchmark", make_modality_gap_fixture(seed))
    retrieval_dir("separable", make_separable_fixture(seed))

    d = os.path.join(outdir, "augment")
    os.makedirs(d, exist_ok=True)
    fx = make_augment_fixture(seed)
    save_manifest(fx.manifest, os.path.join(d, "records.jsonl"))
    save_manifest(fx.expected, os.path.join(d, "expected.jsonl"))
    save_embeddings(fx.images, os.path.join(d, "images.emb"))
    save_fixture_provider(fx.provider.matrix, fx.provider.text_to_row, os.path.join(d, "provider"))
    _atomic_write_bytes(
        os.path.join(d, "vocab.json"),
        (json.dumps(fx.vocab.to_json(), indent=2) + "\n").encode("utf-8"),
    )
    paths["augment"] = d
    return paths
