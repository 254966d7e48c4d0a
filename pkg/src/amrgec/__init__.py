"""AMR toolkit for semantic-graph-aided grammatical error correction."""

__version__ = "0.1.0"

from .align import Alignment, align, alignment_coverage
from .amr import AmrGraph, InvalidGraph
from .canonical import TripleSet, canonicalize
from .denoise import MaskSpec, mask_node_edge, mask_subgraph
from .encoder import EncoderParams, encode, fuse, gnn_forward, init_params, sequence_encode
from .penman import parse_penman, read_corpus, serialize_penman, write_corpus
from .seqgraph import SequenceAmrGraph, build_sequence_amr_graph, export_graph_json, import_graph_json
from .smatch import graphs_identical, reliability_rate, smatch
from .training import gradient_check, overfit_toy
