from .Alphabet import Alphabet, build_alphabet, encode_symbol
from .Corpus import Corpus, sample_text_batch
from .IdxFile import (
	BadMagicError, DimensionOverflowError, IdxError, IdxMagic, LabelRangeError, MnistSet,
	TruncatedPayloadError, parse_idx, read_idx
)
from .ComboTask import ComboSequence, combo_test_set, make_combo_batch, make_combo_sequence, preprocess_digit

__all__ = [
	"Alphabet", "build_alphabet", "encode_symbol", "Corpus", "sample_text_batch",
	"IdxError", "BadMagicError", "TruncatedPayloadError", "DimensionOverflowError", "LabelRangeError",
	"IdxMagic", "MnistSet", "parse_idx", "read_idx",
	"ComboSequence", "make_combo_sequence", "make_combo_batch", "combo_test_set", "preprocess_digit"
]
