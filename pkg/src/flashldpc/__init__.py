"""Read-channel quantization and LDPC simulation toolkit."""

__version__ = "0.1.0"
