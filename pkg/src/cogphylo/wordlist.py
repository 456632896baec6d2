"""Multilingual wordlist model and TSV I/O.

A wordlist is a table of word forms, one per (language, concept)
observation, with IPA tokens and their sound-class encoding. The TSV
format has columns ID, DOCULECT, CONCEPT, IPA and an optional COGID
carrying gold cognate-set annotations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .sounds import EmptyFormError, SoundClassModel, default_sound_model, tokenize_ipa

REQUIRED_COLUMNS = ("ID", "DOCULECT", "CONCEPT", "IPA")


class MissingColumnError(ValueError):
    """A required wordlist column is absent from the header."""


class DuplicateIdError(ValueError):
    """Two wordlist rows share the same form ID."""


@dataclass(frozen=True)
class WordForm:
    """One word in one language for one concept."""

    id: int
    doculect: str
    concept: str
    tokens: tuple[str, ...]
    classes: str
    gold_cogid: int | None = None

    def __post_init__(self) -> None:
        if not self.tokens:
            raise EmptyFormError(f"form {self.id} has no tokens")
        if len(self.classes) != len(self.tokens):
            raise ValueError(
                f"form {self.id}: class string length {len(self.classes)} "
                f"!= token count {len(self.tokens)}"
            )


@dataclass(frozen=True)
class Wordlist:
    """Immutable collection of word forms indexed by concept."""

    forms: tuple[WordForm, ...]
    index: dict[str, tuple[int, ...]]
    languages: tuple[str, ...]

    @classmethod
    def from_forms(cls, forms: list[WordForm] | tuple[WordForm, ...]) -> "Wordlist":
        ordered = tuple(sorted(forms, key=lambda f: f.id))
        seen: set[int] = set()
        for form in ordered:
            if form.id in seen:
                raise DuplicateIdError(f"duplicate form ID {form.id}")
            seen.add(form.id)
        index: dict[str, list[int]] = {}
        for form in ordered:
            index.setdefault(form.concept, []).append(form.id)
        languages = tuple(sorted({f.doculect for f in ordered}))
        return cls(
            forms=ordered,
            index={c: tuple(ids) for c, ids in sorted(index.items())},
            languages=languages,
        )

    def __len__(self) -> int:
        return len(self.forms)

    def __iter__(self):
        return iter(self.forms)

    def get(self, form_id: int) -> WordForm:
        form = self._by_id().get(form_id)
        if form is None:
            raise KeyError(f"no form with ID {form_id}")
        return form

    def _by_id(self) -> dict[int, WordForm]:
        cached = getattr(self, "_by_id_cache", None)
        if cached is None:
            cached = {f.id: f for f in self.forms}
            object.__setattr__(self, "_by_id_cache", cached)
        return cached

    def concepts(self) -> tuple[str, ...]:
        return tuple(self.index)

    def forms_for_concept(self, concept: str) -> tuple[WordForm, ...]:
        return tuple(self.get(i) for i in self.index[concept])


def _header_positions(header: list[str], path: Path) -> dict[str, int]:
    positions = {name.strip().upper(): i for i, name in enumerate(header)}
    for column in REQUIRED_COLUMNS:
        if column not in positions:
            raise MissingColumnError(f"{path}: missing required column {column}")
    return positions


def load_wordlist(
    path: str | Path, model: SoundClassModel | None = None
) -> Wordlist:
    """Parse a wordlist TSV, tokenizing and classifying every form.

    Rows with an empty IPA field, duplicate IDs, or a missing required
    column raise with the offending row number.
    """
    path = Path(path)
    model = model or default_sound_model()
    forms: list[WordForm] = []
    seen_ids: dict[int, int] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumnError(f"{path}: file is empty, no header row")
        positions = _header_positions(header, path)
        cogid_pos = positions.get("COGID")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                form_id = int(row[positions["ID"]])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: ID must be an integer")
            if form_id in seen_ids:
                raise DuplicateIdError(
                    f"{path}:{lineno}: ID {form_id} already used on row "
                    f"{seen_ids[form_id]}"
                )
            seen_ids[form_id] = lineno
            try:
                tokens = tuple(tokenize_ipa(row[positions["IPA"]]))
            except EmptyFormError:
                raise EmptyFormError(f"{path}:{lineno}: empty IPA field")
            gold = None
            if cogid_pos is not None and len(row) > cogid_pos and row[cogid_pos].strip():
                gold = int(row[cogid_pos])
                if gold <= 0:
                    raise ValueError(f"{path}:{lineno}: COGID must be positive")
            forms.append(
                WordForm(
                    id=form_id,
                    doculect=row[positions["DOCULECT"]].strip(),
                    concept=row[positions["CONCEPT"]].strip(),
                    tokens=tokens,
                    classes=model.classify(tokens),
                    gold_cogid=gold,
                )
            )
    return Wordlist.from_forms(forms)


def save_wordlist(wordlist: Wordlist, path: str | Path) -> None:
    """Write a wordlist back to TSV with space-separated IPA tokens."""
    has_gold = any(f.gold_cogid is not None for f in wordlist.forms)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        header = list(REQUIRED_COLUMNS) + (["COGID"] if has_gold else [])
        writer.writerow(header)
        for form in wordlist.forms:
            row = [form.id, form.doculect, form.concept, " ".join(form.tokens)]
            if has_gold:
                row.append("" if form.gold_cogid is None else form.gold_cogid)
            writer.writerow(row)


def read_id_column(path: str | Path, column: str) -> dict[int, int]:
    """Read a form-ID -> integer mapping from one column of a wordlist TSV."""
    path = Path(path)
    out: dict[int, int] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumnError(f"{path}: file is empty, no header row")
        positions = {name.strip().upper(): i for i, name in enumerate(header)}
        if "ID" not in positions:
            raise MissingColumnError(f"{path}: missing required column ID")
        if column.upper() not in positions:
            raise MissingColumnError(f"{path}: missing required column {column}")
        target = positions[column.upper()]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            form_id = int(row[positions["ID"]])
            if form_id in out:
                raise DuplicateIdError(f"{path}:{lineno}: ID {form_id} repeated")
            out[form_id] = int(row[target])
    return out
