"""CYK recognition over holographic d x d matrix representations."""
from .cyk import Chart, cyk_parse, parse_chart, recognizes, serialize_chart
from .dcyk import (
    DistChart,
    RuleOperators,
    dcyk_binary,
    dcyk_parse,
    dcyk_recognize,
    dcyk_unary,
    decode_chart,
    decode_scores,
    encode_binary_rules,
    encode_unary_rules,
    init_pleft,
)
from .grammar import (
    Grammar,
    GrammarError,
    GenerationError,
    builtin_grammar,
    expand_grammar,
    generate_sentence,
    generate_sentences,
    load_grammar,
    parse_grammar,
    render,
)
from .hrr import (
    HrrSpace,
    decode_op,
    encode,
    identity_score,
    sigmoid_mat,
    vector_of,
)

__version__ = "0.1.0"
