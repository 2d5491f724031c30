"""Question corpus: item loading, category taxonomy, and frozen stratified item lists.

Items are multiple-choice video questions with five options (A..E) and a
category code from a fixed eight-code taxonomy. The taxonomy folds into three
groups (Causal, Temporal, Descriptive) used for stratification and per-group
reporting. A frozen item list pins every experiment to the same instances.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

OPTION_LABELS = ("A", "B", "C", "D", "E")

CATEGORY_GROUPS: dict[str, frozenset[str]] = {
    "Causal": frozenset({"CW", "CH"}),
    "Temporal": frozenset({"TN", "TC", "TP"}),
    "Descriptive": frozenset({"DO", "DL", "DC"}),
}

GROUP_ORDER = ("Causal", "Temporal", "Descriptive")

_CODE_TO_GROUP = {code: group for group, codes in CATEGORY_GROUPS.items() for code in codes}

VALID_CATEGORY_CODES = frozenset(_CODE_TO_GROUP)


class CorpusError(ValueError):
    """Raised for malformed item files or invalid item data."""


@dataclass(frozen=True)
class ItemSpec:
    """One multiple-choice question tied to a video.

    Exactly five options keyed A..E; ``answer`` is one of the option labels;
    ``category_code`` belongs to the eight-code taxonomy.
    """

    question_id: str
    video_id: str
    question: str
    options: dict[str, str]
    answer: str
    category_code: str

    def __post_init__(self) -> None:
        if tuple(sorted(self.options)) != OPTION_LABELS:
            missing = [c for c in OPTION_LABELS if c not in self.options]
            extra = [c for c in self.options if c not in OPTION_LABELS]
            raise CorpusError(
                f"item {self.question_id!r}: options must have exactly labels A-E"
                f" (missing {missing}, unexpected {extra})"
            )
        if self.answer not in self.options:
            raise CorpusError(
                f"item {self.question_id!r}: answer {self.answer!r} not an option label"
            )
        if self.category_code not in VALID_CATEGORY_CODES:
            raise CorpusError(
                f"item {self.question_id!r}: unknown category_code {self.category_code!r}"
            )

    @property
    def group(self) -> str:
        return _CODE_TO_GROUP[self.category_code]


@dataclass(frozen=True)
class FrozenItemList:
    """Ordered, de-duplicated list of question ids plus the sampling parameters."""

    ids: tuple[str, ...]
    per_group_count: int
    seed: int

    def digest(self) -> str:
        """SHA256 over the canonical serialization, for run provenance."""
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def to_json(self) -> str:
        doc = {"ids": list(self.ids), "per_group_count": self.per_group_count, "seed": self.seed}
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def group_of(code: str) -> str:
    """Map a category code to its group (Causal, Temporal, or Descriptive)."""
    try:
        return _CODE_TO_GROUP[code]
    except KeyError:
        raise CorpusError(f"unknown category code {code!r}") from None


_ITEM_FIELDS = {"question_id", "video_id", "question", "options", "answer", "category_code"}


def _item_from_record(rec: dict, lineno: int) -> ItemSpec:
    if not isinstance(rec, dict):
        raise CorpusError(f"line {lineno}: record is not an object")
    missing = _ITEM_FIELDS - rec.keys()
    if missing:
        raise CorpusError(f"line {lineno}: missing fields {sorted(missing)}")
    extra = rec.keys() - _ITEM_FIELDS
    if extra:
        raise CorpusError(f"line {lineno}: unexpected fields {sorted(extra)}")
    if not isinstance(rec["options"], dict):
        raise CorpusError(f"line {lineno}: options must be an object")
    for field in ("question_id", "video_id", "question", "answer", "category_code"):
        if not isinstance(rec[field], str):
            raise CorpusError(f"line {lineno}: field {field!r} must be a string")
    try:
        return ItemSpec(
            question_id=rec["question_id"],
            video_id=rec["video_id"],
            question=rec["question"],
            options={str(k): str(v) for k, v in rec["options"].items()},
            answer=rec["answer"],
            category_code=rec["category_code"],
        )
    except CorpusError as exc:
        raise CorpusError(f"line {lineno}: {exc}") from None


def load_items(path: str | Path) -> list[ItemSpec]:
    """Load items from a line-delimited JSON file, preserving order.

    Every line must be a valid item record; errors carry the offending line
    number. Duplicate question ids are rejected.
    """
    items: list[ItemSpec] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            item = _item_from_record(rec, lineno)
            if item.question_id in seen:
                raise CorpusError(f"line {lineno}: duplicate question_id {item.question_id!r}")
            seen.add(item.question_id)
            items.append(item)
    return items


def save_items(items: list[ItemSpec], path: str | Path) -> None:
    """Write items as line-delimited JSON (inverse of load_items)."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            rec = {
                "question_id": item.question_id,
                "video_id": item.video_id,
                "question": item.question,
                "options": {label: item.options[label] for label in OPTION_LABELS},
                "answer": item.answer,
                "category_code": item.category_code,
            }
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def _group_rng(seed: int, group: str) -> random.Random:
    # Distinct, version-stable stream per group; int seeds keep shuffle reproducible.
    material = hashlib.sha256(f"{seed}:{group}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(material[:8], "big"))


def freeze_stratified(items: list[ItemSpec], per_group: int, seed: int) -> FrozenItemList:
    """Select ``per_group`` items from each group by a seeded per-group shuffle.

    Pure in (items, per_group, seed): repeated calls yield identical lists.
    Raises when any group has too few eligible items, naming the group.
    """
    if per_group < 0:
        raise CorpusError("per_group must be nonnegative")
    by_group: dict[str, list[str]] = {g: [] for g in GROUP_ORDER}
    for item in items:
        by_group[item.group].append(item.question_id)
    chosen: list[str] = []
    for group in GROUP_ORDER:
        ids = by_group[group]
        if len(ids) < per_group:
            raise CorpusError(
                f"group {group} has {len(ids)} eligible items, need {per_group}"
            )
        _group_rng(seed, group).shuffle(ids)
        chosen.extend(ids[:per_group])
    return FrozenItemList(ids=tuple(chosen), per_group_count=per_group, seed=seed)


def save_frozen_list(frozen: FrozenItemList, path: str | Path) -> None:
    Path(path).write_text(frozen.to_json(), encoding="utf-8")


def load_frozen_list(path: str | Path) -> FrozenItemList:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return FrozenItemList(
            ids=tuple(str(i) for i in doc["ids"]),
            per_group_count=int(doc["per_group_count"]),
            seed=int(doc["seed"]),
        )
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"malformed frozen item list {path}: {exc}") from None


def items_by_id(items: list[ItemSpec]) -> dict[str, ItemSpec]:
    return {item.question_id: item for item in items}


def answer_key(items: list[ItemSpec]) -> dict[str, tuple[str, str]]:
    """Map question_id to (answer label, category code) for metric computation."""
    return {item.question_id: (item.answer, item.category_code) for item in items}
