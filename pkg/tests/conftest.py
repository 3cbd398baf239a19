import pytest


@pytest.fixture
def report(capsys):
    """Print one verdict line past pytest's capture, then return the verdict."""

    def emit(criterion, ok, detail, gating=True):
        tag = ("PASS" if ok else "FAIL") if gating else "INFO"
        with capsys.disabled():
            print(f"\n[acceptance {criterion}] {tag}: {detail}")
        return ok

    return emit
