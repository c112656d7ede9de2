"""Data model, corpus file ingestion, preprocessing, and split sampling.

Three on-disk formats are supported, all UTF-8:

* column-formatted NER files (token in the first column, BIO tag in the
  last, blank line between sentences, ``-DOCSTART-`` blocks skipped),
* 10-column CoNLL-U dependency treebanks,
* classification TSV with the mandatory header ``label\\tlanguage\\ttext``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, FormatError, ParseError

_LANGUAGE_RE = re.compile(r"^[a-z][a-z0-9_-]*$")
_BIO_RE = re.compile(r"^(O|[BI]-\S+)$")

TSV_HEADER = "label\tlanguage\ttext"


def check_language(code: str) -> str:
    if not _LANGUAGE_RE.match(code):
        raise DataError(f"invalid language code {code!r} (lowercase ASCII required)")
    return code


@dataclass(frozen=True)
class ClassificationText:
    text: str
    label: str | None = None


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[str, ...]
    tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.tags is not None and len(self.tags) != len(self.tokens):
            raise DataError("tag count does not match token count")


@dataclass(frozen=True)
class DepTree:
    tokens: tuple[str, ...]
    upos: tuple[str, ...]
    heads: tuple[int, ...] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        n = len(self.tokens)
        if len(self.upos) != n:
            raise DataError("UPOS count does not match token count")
        if self.heads is not None:
            if len(self.heads) != n:
                raise DataError("head count does not match token count")
            if self.labels is not None and len(self.labels) != n:
                raise DataError("label count does not match token count")


Payload = ClassificationText | TaggedSentence | DepTree


@dataclass(frozen=True)
class Instance:
    """One annotatable unit: a payload with a language tag and a cost.

    Cost is the token count for token-budgeted tasks and 1 for classification.
    """

    id: int
    language: str
    payload: Payload
    cost: int

    def __post_init__(self):
        if self.cost < 1:
            raise DataError(f"instance {self.id} has non-positive cost {self.cost}")


@dataclass(frozen=True)
class SplitSpec:
    seed_budget: int
    val_budget: int
    rng_seed: int

    def __post_init__(self):
        if self.seed_budget < 1 or self.val_budget < 1:
            raise ConfigError("split budgets must be positive")


def _validate_tree_heads(heads: Sequence[int], n: int) -> None:
    roots = [d for d, h in enumerate(heads, start=1) if h == 0]
    if len(roots) != 1:
        raise DataError(f"expected exactly one root token, found {len(roots)}")
    for start in range(1, n + 1):
        seen = set()
        v = start
        while v != 0:
            if v in seen:
                raise DataError(f"head cycle through token {start}")
            seen.add(v)
            v = heads[v - 1]


def ingest_conll_ner(path, language: str, start_id: int = 0) -> list[Instance]:
    """Read a column-formatted NER file into tagged-sentence instances."""
    check_language(language)
    path = Path(path)
    instances = []
    tokens: list[str] = []
    tags: list[str] = []
    next_id = start_id

    def flush():
        nonlocal next_id
        if tokens:
            payload = TaggedSentence(tuple(tokens), tuple(tags))
            instances.append(Instance(next_id, language, payload, len(tokens)))
            next_id += 1
            tokens.clear()
            tags.clear()

    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                flush()
                continue
            cols = line.split()
            if cols[0] == "-DOCSTART-":
                flush()
                continue
            if len(cols) < 2:
                raise ParseError(
                    f"expected at least 2 columns, got {len(cols)}", path=path, line=line_no
                )
            tag = cols[-1]
            if not _BIO_RE.match(tag):
                raise ParseError(f"tag {tag!r} is not valid BIO", path=path, line=line_no)
            tokens.append(cols[0])
            tags.append(tag)
    flush()
    return instances


def ingest_conllu(path, language: str, start_id: int = 0) -> list[Instance]:
    """Read a CoNLL-U file into dependency-tree instances.

    Multiword-token lines (hyphenated ids) and empty nodes (dotted ids) are
    skipped; cost counts syntactic-word lines only. Files without head
    annotations (``_`` in the HEAD column) produce unlabeled trees.
    """
    check_language(language)
    path = Path(path)
    instances = []
    rows: list[tuple[int, str, str, str, str]] = []  # (line_no, form, upos, head, deprel)
    next_id = start_id
    sent_start = 0

    def flush():
        nonlocal next_id
        if not rows:
            return
        n = len(rows)
        forms = tuple(r[1] for r in rows)
        upos = tuple(r[2] for r in rows)
        head_cols = [r[3] for r in rows]
        if all(h == "_" for h in head_cols):
            heads = labels = None
        else:
            heads = []
            for line_no, _, _, head, _ in rows:
                try:
                    h = int(head)
                except ValueError:
                    raise ParseError(f"head {head!r} is not an integer", path=path, line=line_no)
                if not 0 <= h <= n:
                    raise ParseError(
                        f"head {h} out of range for a {n}-token sentence", path=path, line=line_no
                    )
                heads.append(h)
            try:
                _validate_tree_heads(heads, n)
            except DataError as exc:
                raise DataError(f"{path}: sentence starting at line {sent_start}: {exc}")
            heads = tuple(heads)
            labels = tuple(r[4] for r in rows)
        payload = DepTree(forms, upos, heads, labels)
        instances.append(Instance(next_id, language, payload, n))
        next_id += 1
        rows.clear()

    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise ParseError(
                    f"expected 10 tab-separated columns, got {len(cols)}",
                    path=path,
                    line=line_no,
                )
            if "-" in cols[0] or "." in cols[0]:
                continue
            if not rows:
                sent_start = line_no
            rows.append((line_no, cols[1], cols[3], cols[6], cols[7]))
    flush()
    return instances


def ingest_tsv_classification(path, start_id: int = 0) -> list[Instance]:
    """Read a three-column classification TSV (label, language, text)."""
    path = Path(path)
    instances = []
    next_id = start_id
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").rstrip("\r")
        if header != TSV_HEADER:
            raise FormatError(f"{path}: missing header {TSV_HEADER!r}")
        for row_no, raw in enumerate(handle, start=2):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError(f"expected 3 columns, got {len(cols)}", path=path, line=row_no)
            label, language, text = cols
            check_language(language)
            if not text:
                raise ParseError("empty text field", path=path, line=row_no)
            payload = ClassificationText(text, label or None)
            instances.append(Instance(next_id, language, payload, 1))
            next_id += 1
    return instances


def write_conll_ner(instances: Iterable[Instance], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for inst in instances:
            payload = inst.payload
            tags = payload.tags if payload.tags is not None else ("O",) * len(payload.tokens)
            for token, tag in zip(payload.tokens, tags):
                handle.write(f"{token} {tag}\n")
            handle.write("\n")


def write_conllu(instances: Iterable[Instance], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for inst in instances:
            payload = inst.payload
            n = len(payload.tokens)
            heads = payload.heads if payload.heads is not None else ("_",) * n
            labels = payload.labels if payload.labels is not None else ("_",) * n
            for i in range(n):
                cols = (
                    str(i + 1),
                    payload.tokens[i],
                    "_",
                    payload.upos[i],
                    "_",
                    "_",
                    str(heads[i]),
                    labels[i],
                    "_",
                    "_",
                )
                handle.write("\t".join(cols) + "\n")
            handle.write("\n")


def write_tsv_classification(instances: Iterable[Instance], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(TSV_HEADER + "\n")
        for inst in instances:
            payload = inst.payload
            handle.write(f"{payload.label or ''}\t{inst.language}\t{payload.text}\n")


def dedup(instances: Sequence[Instance]) -> list[Instance]:
    """Drop instances whose (language, payload) already occurred, keeping order.

    The key covers the full payload content, annotations included, so the
    same text in two languages survives.
    """
    seen = set()
    kept = []
    for inst in instances:
        key = (inst.language, inst.payload)
        if key in seen:
            continue
        seen.add(key)
        kept.append(inst)
    return kept


def length_filter(instances: Sequence[Instance], max_tokens: int) -> list[Instance]:
    """Drop over-long tagging/parsing sentences; truncate classification text.

    Sentences of exactly `max_tokens` tokens are kept. Classification text is
    cut to its first `max_tokens` whitespace tokens instead of being dropped.
    """
    if max_tokens < 1:
        raise ConfigError("max_tokens must be positive")
    kept = []
    for inst in instances:
        payload = inst.payload
        if isinstance(payload, ClassificationText):
            words = payload.text.split()
            if len(words) > max_tokens:
                inst = replace(inst, payload=replace(payload, text=" ".join(words[:max_tokens])))
            kept.append(inst)
        else:
            if len(payload.tokens) <= max_tokens:
                kept.append(inst)
    return kept


class Pool:
    """Instances partitioned into labeled / unlabeled / validation / test.

    Partitions are pairwise disjoint by instance id; the only mutation is
    moving instances from unlabeled to labeled via `move_to_labeled`.
    """

    def __init__(self, labeled=(), unlabeled=(), validation=(), test=()):
        self.labeled = {i.id: i for i in labeled}
        self.unlabeled = {i.id: i for i in unlabeled}
        self.validation = {i.id: i for i in validation}
        self.test = {i.id: i for i in test}
        self._check_disjoint()

    def _check_disjoint(self):
        parts = [self.labeled, self.unlabeled, self.validation, self.test]
        total = sum(len(p) for p in parts)
        union = set()
        for p in parts:
            union.update(p.keys())
        if len(union) != total:
            raise DataError("pool partitions share instance ids")

    def partitions(self) -> dict[str, dict[int, Instance]]:
        return {
            "labeled": self.labeled,
            "unlabeled": self.unlabeled,
            "validation": self.validation,
            "test": self.test,
        }

    def language_index(self, partition: str) -> dict[str, list[int]]:
        """Sorted instance ids per language for one partition."""
        index: dict[str, list[int]] = {}
        for inst in self.partitions()[partition].values():
            index.setdefault(inst.language, []).append(inst.id)
        return {lang: sorted(ids) for lang, ids in sorted(index.items())}

    def move_to_labeled(self, ids: Iterable[int]) -> list[Instance]:
        moved = []
        for iid in ids:
            if iid not in self.unlabeled:
                raise DataError(f"instance {iid} is not in the unlabeled pool")
            inst = self.unlabeled.pop(iid)
            self.labeled[iid] = inst
            moved.append(inst)
        return moved


def _first_fit(order: Sequence[Instance], budget: int) -> tuple[list[Instance], list[Instance]]:
    """Walk `order`, taking every instance whose cost still fits the budget."""
    taken, passed = [], []
    remaining = budget
    for inst in order:
        if inst.cost <= remaining:
            taken.append(inst)
            remaining -= inst.cost
        else:
            passed.append(inst)
    return taken, passed


def sample_splits(
    instances: Sequence[Instance],
    spec: SplitSpec,
    allocation: Mapping[str, tuple[int, int]] | None = None,
    test: Sequence[Instance] = (),
) -> Pool:
    """Draw seed and validation sets without replacement; the rest is unlabeled.

    With `allocation`, each listed language is sampled independently with its
    own (seed, validation) budgets; without it, one pooled draw over all
    instances uses the budgets in `spec`. Instances are shuffled with the
    seeded PRNG and taken first-fit until the budget would be exceeded, so the
    draw is a pure function of (instances ordered by id, spec, allocation).
    """
    ordered = sorted(instances, key=lambda i: i.id)
    if len({i.id for i in ordered}) != len(ordered):
        raise DataError("duplicate instance ids in sampling input")
    rng = np.random.default_rng(spec.rng_seed)
    if allocation is None:
        groups = [("pool", ordered, spec.seed_budget, spec.val_budget)]
    else:
        present = {i.language for i in ordered}
        unknown = sorted(set(allocation) - present)
        if unknown:
            raise ConfigError(f"allocation names absent language(s): {', '.join(unknown)}")
        groups = [
            (lang, [i for i in ordered if i.language == lang], seed_b, val_b)
            for lang, (seed_b, val_b) in sorted(allocation.items())
        ]
    labeled: list[Instance] = []
    validation: list[Instance] = []
    unlabeled: list[Instance] = []
    allocated_languages = {g[0] for g in groups} if allocation is not None else None
    for name, candidates, seed_b, val_b in groups:
        available = sum(i.cost for i in candidates)
        if available < seed_b + val_b:
            raise ConfigError(
                f"{name}: available cost {available} cannot cover seed+validation "
                f"budget {seed_b + val_b}"
            )
        perm = rng.permutation(len(candidates))
        shuffled = [candidates[int(k)] for k in perm]
        seed, rest = _first_fit(shuffled, seed_b)
        val, rest = _first_fit(rest, val_b)
        labeled.extend(seed)
        validation.extend(val)
        unlabeled.extend(rest)
    if allocated_languages is not None:
        unlabeled.extend(i for i in ordered if i.language not in allocated_languages)
    return Pool(labeled=labeled, unlabeled=unlabeled, validation=validation, test=test)
