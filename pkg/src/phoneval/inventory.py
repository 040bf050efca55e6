"""Phoneme inventories and their phonological class taxonomy.

An inventory file is UTF-8 text with two header lines followed by one
record per line::

    language: german
    silence: SIL
    f<TAB>fricative
    s<TAB>fricative
    ...

Record order in the file is the canonical order of the inventory; every
argmax tie-break elsewhere in the package refers to it. Twelve ready-made
inventories ship with the package under ``data/inventories``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import ValidationError


class PhonemeClass(str, Enum):
    FRICATIVE = "fricative"
    AFFRICATE = "affricate"
    PLOSIVE = "plosive"
    VIBRANT = "vibrant"
    NASAL = "nasal"
    APPROXIMANT = "approximant"
    MONOPHTHONG = "monophthong"
    DIPHTHONG = "diphthong"
    SILENCE = "silence"


#: Canonical class order used for confusion matrices (silence last).
CLASS_ORDER: tuple[PhonemeClass, ...] = tuple(PhonemeClass)

#: Classes a phoneme record may declare (silence is reserved).
PHONEME_CLASS_NAMES = frozenset(c.value for c in PhonemeClass if c is not PhonemeClass.SILENCE)


@dataclass(frozen=True)
class PhonemeInventory:
    """A language's phoneme set, its class labels, and the silence symbol.

    Immutable after construction; safe to share across workers. Phone
    indices run 0..len(phonemes)-1 in canonical order, and the silence
    symbol always gets index len(phonemes).
    """

    language: str
    phonemes: tuple[str, ...]
    classes: dict[str, PhonemeClass]
    silence: str = "SIL"
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.language:
            raise ValidationError("inventory has no language id")
        seen = set()
        for sym in self.phonemes:
            if not sym:
                raise ValidationError("empty phoneme symbol")
            if sym in seen:
                raise ValidationError(f"duplicate phoneme symbol: {sym!r}")
            seen.add(sym)
        if not self.silence:
            raise ValidationError("empty silence symbol")
        if self.silence in seen:
            raise ValidationError(f"silence symbol {self.silence!r} also listed as a phoneme")
        missing = seen - set(self.classes)
        if missing:
            raise ValidationError(f"phonemes without a class: {sorted(missing)}")
        for sym, cls in self.classes.items():
            if sym not in seen:
                raise ValidationError(f"class declared for unknown symbol {sym!r}")
            if cls is PhonemeClass.SILENCE:
                raise ValidationError(f"phoneme {sym!r} may not use the reserved silence class")
        index = {sym: i for i, sym in enumerate(self.phonemes)}
        index[self.silence] = len(self.phonemes)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.phonemes)

    @property
    def silence_index(self) -> int:
        return len(self.phonemes)

    @property
    def n_labels(self) -> int:
        """Number of frame labels: phonemes plus silence."""
        return len(self.phonemes) + 1

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise ValidationError(f"symbol {symbol!r} not in inventory {self.language!r}") from None

    def symbol(self, index: int) -> str:
        if index == self.silence_index:
            return self.silence
        return self.phonemes[index]

    def class_of(self, symbol: str) -> PhonemeClass:
        if symbol == self.silence:
            return PhonemeClass.SILENCE
        try:
            return self.classes[symbol]
        except KeyError:
            raise ValidationError(f"symbol {symbol!r} not in inventory {self.language!r}") from None

    def class_of_index(self, index: int) -> PhonemeClass:
        return self.class_of(self.symbol(index))


def one_to_one_vocab_size(inv: PhonemeInventory) -> int:
    """Vocabulary size of the one-to-one track: phoneme count plus one for silence."""
    return len(inv.phonemes) + 1


def load_inventory(path: str | Path) -> PhonemeInventory:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{path}: not valid UTF-8: {exc}") from exc
    language = None
    silence = None
    phonemes: list[str] = []
    classes: dict[str, PhonemeClass] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("language:"):
            language = line.split(":", 1)[1].strip()
            continue
        if line.startswith("silence:"):
            silence = line.split(":", 1)[1].strip()
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected '<symbol>\\t<class>', got {raw!r}")
        sym, cls_name = parts[0].strip(), parts[1].strip()
        if cls_name not in PHONEME_CLASS_NAMES:
            raise ValidationError(f"{path}:{lineno}: unknown class label {cls_name!r}")
        if sym in classes:
            raise ValidationError(f"{path}:{lineno}: duplicate phoneme symbol {sym!r}")
        phonemes.append(sym)
        classes[sym] = PhonemeClass(cls_name)
    if language is None:
        raise ValidationError(f"{path}: missing 'language:' header")
    if silence is None:
        raise ValidationError(f"{path}: missing 'silence:' declaration")
    try:
        return PhonemeInventory(language=language, phonemes=tuple(phonemes),
                                classes=classes, silence=silence)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_inventory(inv: PhonemeInventory, path: str | Path) -> None:
    lines = [f"language: {inv.language}", f"silence: {inv.silence}"]
    lines += [f"{sym}\t{inv.classes[sym].value}" for sym in inv.phonemes]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def bundled_languages() -> list[str]:
    """Names of the inventories shipped with the package."""
    root = resources.files("phoneval").joinpath("data/inventories")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".tsv"))


def load_bundled_inventory(language: str) -> PhonemeInventory:
    root = resources.files("phoneval").joinpath("data/inventories")
    res = root.joinpath(f"{language}.tsv")
    if not res.is_file():
        raise ValidationError(f"no bundled inventory for {language!r}; "
                              f"available: {', '.join(bundled_languages())}")
    with resources.as_file(res) as path:
        return load_inventory(path)
