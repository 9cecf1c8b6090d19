"""textlib: small text and record utilities used by the demo suite."""

from .casing import camel_case, is_upper_snake, snake_case, title_words
from .metrics import clamp, histogram, mean, normalize, weighted_score
from .records import Record, RecordStore, TimedRecord
from .parsing import count_sections, parse_config, parse_pair, safe_int

__all__ = [
    "camel_case", "is_upper_snake", "snake_case", "title_words",
    "clamp", "histogram", "mean", "normalize", "weighted_score",
    "Record", "RecordStore", "TimedRecord",
    "count_sections", "parse_config", "parse_pair", "safe_int",
]
