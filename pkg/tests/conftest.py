import os
import sys

import pytest

# Add the project root to sys.path for test imports
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from models.samples import SampleKind, TextSample  # noqa: E402

WHOIS_FIXTURE = """\
% fixture: bulk registrations
Domain Name: spoof1.com
Registrant Name: John Doe
Registrant Email: X@Y.Z
Registrar: CheapNames Inc
Name Server: ns1.evil.net
Name Server: ns2.evil.net
Creation Date: 2024-01-01T00:10:00Z

Domain Name: spoof2.com
Registrant Email: x@y.z
Registrar: CheapNames Inc
Creation Date: 2024-01-01T00:50:00Z

Registrant Email: orphan@y.z
Registrar: Nobody

Domain Name: bank-login.net
Registrant Name: Jane Roe
Registrar: OtherReg
Creation Date: 2023-06-01T12:00:00Z
"""


@pytest.fixture
def whois_file(tmp_path):
    path = tmp_path / "whois.txt"
    path.write_text(WHOIS_FIXTURE, encoding="utf-8")
    return path


@pytest.fixture
def make_samples():
    """Build domain samples from (text, label) pairs."""
    def _make(pairs, kind=SampleKind.DOMAIN):
        return [TextSample(text=t, label=y, kind=kind, source="test") for t, y in pairs]
    return _make
