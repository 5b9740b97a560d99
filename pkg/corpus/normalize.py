"""
Text normalization shared by every loader.
"""
from models.samples import SampleKind, is_valid_domain

__all__ = ["normalize_text", "is_valid_domain"]


def normalize_text(text: str, kind: SampleKind = SampleKind.DOMAIN) -> str:
    """Lowercase and trim; domains also lose their trailing root dot(s).

    No percent-decoding or punycode decoding is applied. Trailing dots are
    stripped until none remain so that the function is idempotent.
    """
    text = text.strip().lower()
    if kind == SampleKind.DOMAIN:
        while text.endswith("."):
            text = text[:-1].rstrip()
    return text
