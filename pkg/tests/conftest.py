import pytest

from pglot.corpus import fixture_files
from pglot.formats import FormatId
from pglot.synth import SYNTH_FORMATS, synth_donor


@pytest.fixture(scope="session")
def donors():
    """One smallish valid donor per format."""
    out = {}
    for fmt in SYNTH_FORMATS:
        out[fmt] = synth_donor(fmt, seed=1234, size_hint=1200)
    for fmt in (FormatId.JPEG, FormatId.RAR, FormatId.PE):
        out[fmt] = fixture_files(fmt)[0][1]
    return out


@pytest.fixture(scope="session")
def second_donors():
    out = {}
    for fmt in SYNTH_FORMATS:
        out[fmt] = synth_donor(fmt, seed=99, size_hint=800)
    for fmt in (FormatId.JPEG, FormatId.RAR, FormatId.PE):
        out[fmt] = fixture_files(fmt)[1][1]
    return out
