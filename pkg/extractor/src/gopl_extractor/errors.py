"""Error type for the extraction pipeline."""


class ExtractionError(Exception):
    """Model loading, audio decoding, or annotation conversion failed."""
