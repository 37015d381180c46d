from __future__ import annotations

from pathlib import Path

import pytest

LOGIN = """\
Feature: Login
  Background:
    Given the application is running

  Scenario: good password
    Given I am on the login page
    When I enter "admin" as user
    Then the response status is 200 OK

  Scenario: bad password
    Given I am on the login page
    When I enter "guest" as user
    Then the response status is 401
"""

API = """\
Feature: API
  Scenario: list
    When the request is sent
    Then the response status is 200 OK
    And the body contains
      \"\"\"
      {"items": []}
      \"\"\"

  Scenario Outline: create
    Given I add "Accept" header equal to "application/json"
    When I send a POST request to "/<resource>"
    Then the response status is 200 OK

    Examples:
      | resource |
      | users    |
      | groups   |
"""

BRANCHES = """\
Feature: Branches
  Scenario: one
    Given the branches
      | BRANCH | TYPE    |
      | main   | main    |
      | feat   | feature |
    When the request is sent
    Then the response status is 200 OK
"""

MIT = "MIT License\n\nPermission is hereby granted, free of charge, to any person...\n"


@pytest.fixture
def corpus_tree(tmp_path: Path) -> Path:
    """Two repositories, three feature files, 16 steps in total."""
    root = tmp_path / "corpus"
    (root / "alpha" / "features").mkdir(parents=True)
    (root / "beta" / "deep" / "er" / "still").mkdir(parents=True)
    (root / "alpha" / "features" / "login.feature").write_text(LOGIN)
    (root / "alpha" / "features" / "api.feature").write_text(API)
    (root / "alpha" / "LICENSE").write_text(MIT)
    (root / "beta" / "deep" / "er" / "still" / "branches.feature").write_text(BRANCHES)
    (root / "beta" / "notes.txt").write_text("Given not a feature\n")
    return root


# --- acceptance reporting ------------------------------------------------------

_CRITERIA: dict[int, tuple[str, list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        verdict = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        _CRITERIA.setdefault(number, (title, []))[1].append(verdict)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdicts = _CRITERIA[number]
        verdict = next(v for v in ("FAIL", "PASS", "SKIP") if v in verdicts)
        terminalreporter.write_line(f"{verdict} criterion {number:>2}: {title}")
