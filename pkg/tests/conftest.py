import pytest

ACCEPTANCE: dict[str, list] = {}


def record(cid: str, ok: bool, detail: str):
    """Fold one check into the verdict for criterion ``cid`` and echo it."""
    entry = ACCEPTANCE.setdefault(cid, [True, []])
    entry[0] = entry[0] and bool(ok)
    entry[1].append(detail)
    print(f"{'PASS' if ok else 'FAIL'} {cid}: {detail}")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        ok, details = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {cid}: " + "; ".join(details))
