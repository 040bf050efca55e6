"""Evaluation of discrete speech units against gold phone alignments.

Frame-level synchronization, many-to-one and one-to-one unit-to-phoneme
assignment, and scoring by PNMI, PER (with error breakdown and class
confusion), boundary F1/R-value, and ABX discriminability.
"""

from .abx import (AbxItem, AbxResult, RepresentationStore, abx_score, abx_summary,
                  distance, dtw_distance, extract_items)
from .assignment import Assignment, apply_assignment, apply_corpus, many_to_one, one_to_one
from .corpus import (MANY_TO_ONE, ONE_TO_ONE, Manifest, PhoneCorpus, PhoneSegment,
                     UnitCorpus, Utterance, load_gold, load_manifest, load_units,
                     write_gold, write_manifest, write_units)
from .errors import PhonevalError, ValidationError
from .framesync import (ContingencyTable, build_contingency, frame_label, merge,
                        phone_stream)
from .inventory import (PhonemeClass, PhonemeInventory, load_bundled_inventory,
                        load_inventory, one_to_one_vocab_size, write_inventory)
from .metrics import (BoundaryScore, ClassConfusion, PerBreakdown, class_confusion,
                      collapse, match_boundaries, per, per_corpus, pnmi,
                      segmentation_scores, stream_boundaries)
from .runner import EvalReport, aggregate, evaluate
from .synth import ChannelSpec, PlantedRecord, generate, generate_quantized

__version__ = "0.1.0"
