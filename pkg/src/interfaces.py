from abc import ABC, abstractmethod
from typing import Any, Tuple

import numpy as np


class QuantizerInterface(ABC):
    """
    Interface for quantizers that turn bounded embeddings into codebook indices.
    """
    @property
    @abstractmethod
    def num_codebooks(self) -> int:
        """
        Number of indices emitted per frame

        Returns:
            int: Codebook count
        """
        pass

    @property
    @abstractmethod
    def codebook_sizes(self) -> Tuple[int, ...]:
        """
        Number of codes in each codebook

        Returns:
            Tuple[int, ...]: One size per codebook
        """
        pass

    @property
    @abstractmethod
    def dim(self) -> int:
        """
        Width of the embedding the quantizer consumes

        Returns:
            int: Embedding dimension
        """
        pass

    @abstractmethod
    def encode(self, embeddings: np.ndarray) -> np.ndarray:
        """
        Map embeddings to indices

        Args:
            embeddings: Array [..., dim]

        Returns:
            np.ndarray: Integer array [..., num_codebooks]
        """
        pass

    @abstractmethod
    def decode(self, indices: np.ndarray) -> np.ndarray:
        """
        Map indices back to quantized embeddings

        Args:
            indices: Integer array [..., num_codebooks]

        Returns:
            np.ndarray: Array [..., dim]
        """
        pass

    def quantize(self, embeddings: np.ndarray) -> np.ndarray:
        """
        Snap embeddings to their quantized reconstruction

        Args:
            embeddings: Array [..., dim]

        Returns:
            np.ndarray: Quantized array [..., dim]
        """
        return self.decode(self.encode(embeddings))


class ExporterInterface(ABC):
    @abstractmethod
    def export(self, data: Any, output_path: str) -> str:
        """
        Export data to a file

        Args:
            data: The data to export
            output_path: Path where to save the exported file

        Returns:
            str: Path to the exported file
        """
        pass
