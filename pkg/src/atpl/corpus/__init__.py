from .bleu import bleu_score
from .embeddings import EmbeddingTable, load_embeddings
from .formats import (CaptionRecord, UnbindingSequence, load_caption_dataset, read_tagged,
                      read_unbindings, write_caption_dataset, write_tagged, write_unbindings)
from .synth import SynthCorpus, SynthGrammar, caption_features, default_grammar, synth_corpus
from .trees import ParseTree, parse_bracketed, read_treebank, serialize, write_treebank
from .vocab import EOS, UNK, TagSet, Vocabulary, build_tagset, build_vocab

__all__ = [
    "bleu_score", "EmbeddingTable", "load_embeddings", "CaptionRecord", "UnbindingSequence",
    "load_caption_dataset", "read_tagged", "read_unbindings", "write_caption_dataset",
    "write_tagged", "write_unbindings", "SynthCorpus", "SynthGrammar", "default_grammar",
    "synth_corpus", "caption_features", "ParseTree", "parse_bracketed", "read_treebank", "serialize",
    "write_treebank", "EOS", "UNK", "TagSet", "Vocabulary", "build_tagset", "build_vocab",
]
