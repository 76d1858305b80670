"""Source Classifier Port - Interface for turning source snippets into classified leaf tokens."""

from __future__ import annotations

from abc import ABC, abstractmethod

from ..core.entities import TokenMap


class SourceClassifierPort(ABC):
    """Abstract interface for semantic leaf-token classification.

    Implementations may use a hand-written grammar, tree-sitter, or a
    language server; they all emit a validated TokenMap whose boxes follow
    a monospace layout.
    """

    @abstractmethod
    def classify(
        self,
        source: str,
        cell_width: float = 8.0,
        cell_height: float = 16.0,
        taxonomy: tuple[str, ...] | None = None,
    ) -> TokenMap:
        """Classify every leaf token of ``source``.

        Args:
            source: Snippet text.
            cell_width: Width of one character cell in pixels.
            cell_height: Height of one line in pixels.
            taxonomy: Class labels of the resulting map; defaults to the built-in taxonomy.

        Returns:
            TokenMap with one token per leaf, in source order.

        Raises:
            SourceParseException: If the snippet does not parse; carries the line and column of the error.
        """
        pass

    @property
    @abstractmethod
    def language(self) -> str:
        """Identifier of the supported language subset."""
        pass
