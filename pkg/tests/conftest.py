from __future__ import annotations

import numpy as np
import pytest

from phoneval.corpus import PhoneSegment, Utterance
from phoneval.inventory import PhonemeClass, PhonemeInventory


def make_inventory(symbols="abcdefgh", language="toy") -> PhonemeInventory:
    """Small inventory cycling through all eight phoneme classes."""
    classes = [c for c in PhonemeClass if c is not PhonemeClass.SILENCE]
    return PhonemeInventory(
        language=language,
        phonemes=tuple(symbols),
        classes={s: classes[i % len(classes)] for i, s in enumerate(symbols)},
        silence="SIL",
    )


def make_utterance(spec, speaker="spk00", duration=None):
    """Utterance from (phone, onset_sec, offset_sec) triples."""
    segs = tuple(PhoneSegment(phone=p, onset_us=int(round(on * 1e6)),
                              offset_us=int(round(off * 1e6)))
                 for p, on, off in spec)
    dur = int(round(duration * 1e6)) if duration is not None else segs[-1].offset_us
    return Utterance(speaker=speaker, segments=segs, duration_us=dur)


@pytest.fixture
def toy_inventory():
    return make_inventory()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
