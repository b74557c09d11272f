CRITERION_LABELS = {
    "1": "table reproduction",
    "2": "geometry oracle",
    "3": "echo algebra",
    "4": "stochastic oracle",
    "5": "master-equation oracle",
    "6": "bound formulas",
    "7": "estimator calibration",
}


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion.

    Runs outside the capture context, so the lines survive plain
    ``pytest`` runs without -s.
    """
    if report.when != "call":
        return
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    number = report.nodeid.split("test_criterion_")[1].split("_")[0]
    label = CRITERION_LABELS.get(number, "")
    status = "PASS" if report.passed else "FAIL"
    print(f"\ncriterion {number} ({label}): {status} "
          f"[{report.duration:.1f}s]", end="")
