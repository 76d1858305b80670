"""Semantic token classes and the Java keyword sets the classifier maps directly."""

VARIABLE_DECLARATION = "variable declaration"
FUNCTION_DECLARATION = "function declaration"
CONDITIONAL_STATEMENT = "conditional statement"
LOOP = "loop"
FUNCTION_CALL = "function call"
PARAMETER = "parameter"
ARGUMENT = "argument"
OTHER = "other"

DEFAULT_TAXONOMY: tuple[str, ...] = (
    VARIABLE_DECLARATION,
    FUNCTION_DECLARATION,
    CONDITIONAL_STATEMENT,
    LOOP,
    FUNCTION_CALL,
    PARAMETER,
    ARGUMENT,
    OTHER,
)

# Separator used when an n-gram is serialised as a single string key.
NGRAM_SEPARATOR = "→"

LOOP_KEYWORDS: frozenset[str] = frozenset({"while", "for", "do"})

CONDITIONAL_KEYWORDS: frozenset[str] = frozenset({"if", "else", "switch", "case"})

PRIMITIVE_TYPES: frozenset[str] = frozenset(
    {
        "boolean",
        "byte",
        "char",
        "double",
        "float",
        "int",
        "long",
        "short",
        "void",
        "var",
    }
)


def join_gram(gram: tuple[str, ...]) -> str:
    """Serialise an n-gram of class labels into a single key."""
    return NGRAM_SEPARATOR.join(gram)


def split_gram(key: str) -> tuple[str, ...]:
    """Inverse of :func:`join_gram`."""
    return tuple(key.split(NGRAM_SEPARATOR))
