"""IPA tokenization and sound-class encoding.

Words enter the pipeline as IPA strings, either pre-segmented
(space-separated tokens) or raw. Each token is mapped to a coarse
sound class; the class string is what the downstream comparison
algorithms actually operate on.
"""

from __future__ import annotations

import csv
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path


class EmptyFormError(ValueError):
    """Raised when an IPA string yields no tokens."""


VOWEL_CLASS = "V"
DEFAULT_CLASS = "0"

# Double diacritics (tie bars) span two base characters.
_DOUBLE_DIACRITIC_CLASSES = {233, 234}

# Stripped before class lookup: length, stress, tone, syllable marks.
_IGNORED_IN_CLASSIFICATION = set("ːˑˈˌ˥˦˧˨˩ꜛꜜ.’'+0123456789⁰¹²³⁴⁵⁶⁷⁸⁹")

_VOWELS = "aeiouyæøœɶɑɒɐəɚɛɜɝɞɘɤɨʉɯɪʏʊʌɔɵ"

_CONSONANT_CLASSES = {
    "K": "kgqcɟxɣχɢʛɠ",          # velars, palatal and uvular stops
    "T": "tdʈɖθðɗ",              # dentals and dental fricatives
    "P": "pbɓ",                  # labial stops
    "F": "fvɸβʋ",                # labial fricatives
    "S": "szʃʒʂʐɕʑʦʣʧʤʨʥ",      # sibilants and affricates
    "N": "nmŋɲɳɴɱ",              # nasals
    "R": "rlʁɾɽɹɻʎʟɭʀɺɫ",        # liquids, rhotics, laterals
    "J": "jwɥɰʍ",                # glides
    "H": "hɦʔʕħʜʢʡ",             # laryngeals and pharyngeals
}

# Tie-bar-stripped affricate clusters that should classify as one unit.
_CLUSTER_CLASSES = {
    "ts": "S", "dz": "S", "tʃ": "S", "dʒ": "S", "tɕ": "S", "dʑ": "S",
    "tθ": "T", "pf": "F", "kp": "K", "gb": "K",
}


def _attaches(ch: str) -> bool:
    """True if ch modifies the preceding base character."""
    if unicodedata.combining(ch):
        return True
    return unicodedata.category(ch) in ("Lm", "Sk")


def tokenize_ipa(raw: str) -> list[str]:
    """Split an IPA string into segment tokens.

    A string containing spaces is treated as pre-segmented and split
    verbatim. Otherwise the string is NFD-normalized and segmented into
    base characters with their attached marks (combining diacritics,
    modifier letters); tie bars additionally join the following base
    character into the same token.
    """
    raw = raw.strip()
    if not raw:
        raise EmptyFormError("empty IPA string")
    if " " in raw:
        tokens = [t for t in raw.split() if t]
        if not tokens:
            raise EmptyFormError("IPA string contains only spaces")
        return tokens

    text = unicodedata.normalize("NFD", raw)
    tokens: list[str] = []
    current = ""
    pending_join = False
    for ch in text:
        if current and (_attaches(ch) or pending_join):
            current += ch
            pending_join = False
        else:
            if current:
                tokens.append(current)
            current = ch
        if unicodedata.combining(ch) in _DOUBLE_DIACRITIC_CLASSES:
            pending_join = True
    if current:
        tokens.append(current)
    if not tokens:
        raise EmptyFormError("no tokens after segmentation")
    return tokens


@dataclass(frozen=True)
class SoundClassModel:
    """Mapping from IPA tokens to single-character sound-class labels.

    Unknown tokens fall back to ``default_class``. Lookup strips
    length/tone/stress marks first, then attached diacritics, then
    retries on the leading base character, so both plain and heavily
    annotated transcriptions classify consistently.
    """

    name: str
    mapping: dict[str, str] = field(repr=False)
    default_class: str = DEFAULT_CLASS

    def __post_init__(self) -> None:
        for token, label in self.mapping.items():
            if len(label) != 1:
                raise ValueError(
                    f"class label for {token!r} must be one character, got {label!r}"
                )
        if len(self.default_class) != 1:
            raise ValueError("default class must be one character")

    def classify_token(self, token: str) -> str:
        if token in self.mapping:
            return self.mapping[token]
        stripped = "".join(c for c in token if c not in _IGNORED_IN_CLASSIFICATION)
        if stripped in self.mapping:
            return self.mapping[stripped]
        base = "".join(
            c for c in unicodedata.normalize("NFD", stripped) if not _attaches(c)
        )
        if base in self.mapping:
            return self.mapping[base]
        if len(base) > 1 and base[0] in self.mapping:
            return self.mapping[base[0]]
        return self.default_class

    def classify(self, tokens: list[str] | tuple[str, ...]) -> str:
        """Return the class string for a token sequence, one label per token."""
        if not tokens:
            raise EmptyFormError("cannot classify an empty token list")
        return "".join(self.classify_token(t) for t in tokens)


def _build_default_mapping() -> dict[str, str]:
    mapping = {v: VOWEL_CLASS for v in _VOWELS}
    for label, chars in _CONSONANT_CLASSES.items():
        for ch in chars:
            mapping[ch] = label
    mapping.update(_CLUSTER_CLASSES)
    return mapping


def default_sound_model() -> SoundClassModel:
    """The built-in coarse model: ten consonant-ish classes plus V and 0."""
    return SoundClassModel(name="default", mapping=_build_default_mapping())


def load_sound_model(path: str | Path, name: str | None = None) -> SoundClassModel:
    """Load a TOKEN<TAB>CLASS table as a sound-class model."""
    path = Path(path)
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        for lineno, row in enumerate(csv.reader(handle, delimiter="\t"), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected TOKEN<TAB>CLASS")
            token, label = row[0].strip(), row[1].strip()
            mapping[token] = label
    return SoundClassModel(name=name or path.stem, mapping=mapping)


def consonant_skeleton(classes: str, k: int) -> str:
    """First k class labels that are neither vowels nor unknowns."""
    if k < 1:
        raise ValueError("k must be >= 1")
    consonants = [c for c in classes if c not in (VOWEL_CLASS, DEFAULT_CLASS)]
    return "".join(consonants[:k])
