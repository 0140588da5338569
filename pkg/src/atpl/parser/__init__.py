from .layers import (LayerEncoding, build_tree, build_tree_from_encoding, code_from_segments,
                     derive_gold_layers, segments_from_code)
from .model import ConstituencyParser, ParseExample, ParserConfig, make_examples, train_parser
from .parseval import ParsevalScore, constituents, parseval_score

__all__ = [
    "LayerEncoding", "build_tree", "build_tree_from_encoding", "code_from_segments",
    "derive_gold_layers", "segments_from_code", "ConstituencyParser", "ParseExample",
    "ParserConfig", "make_examples", "train_parser", "ParsevalScore", "constituents",
    "parseval_score",
]
