"""Collects acceptance-check outcomes and prints one line per criterion at the end of the run."""

ACCEPTANCE = {}
CRITERIA = {
    1: "coupling profile vs series oracle",
    2: "cosine-operator diagonal",
    3: "two-photon JCM limit",
    4: "closed form vs general 2x2 solver",
    5: "block unitarity and total probability",
    6: "Fock-motion rescaling identity",
    7: "analytic vs numeric effective model",
    8: "RWA / adiabatic-elimination audit",
    9: "figure structure regression",
    10: "CLI determinism",
}


def record(criterion, check, passed, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        checks = ACCEPTANCE.get(n)
        if not checks:
            tr.write_line(f"[{n:2d}] NOT RUN  {title}")
            continue
        ok = all(passed for _, passed, _ in checks)
        tr.write_line(f"[{n:2d}] {'PASS' if ok else 'FAIL'}     {title}")
        for check, passed, detail in checks:
            tr.write_line(f"       {'ok  ' if passed else 'FAIL'} {check}: {detail}")
