"""Lint for the markdown docs: symbols resolve, commands parse, wording is clean."""

import importlib
import re
import shlex
from pathlib import Path

import pytest

from mmapsolve.cli import build_parser

ROOT = Path(__file__).resolve().parent.parent
DOCS = ("README.md", "REPRODUCE.md", "FORMATS.md", "MATH_MAP.md")

REQUIRED_TOPICS = {
    "anisotropic problem", "micro-macro system", "block linear system", "inflow condition",
    "no-inflow variant", "Schur complement", "block preconditioner", "two-iteration property",
    "S1 non-AP operator", "S2 diagonal approximation", "S3 row surgery", "S4 exact boundary rows",
    "S5 combined rows", "S6 Robin closure", "magnetic field", "manufactured solution",
    "GMRES stopping rule", "aligned mesh", "non-aligned mesh", "lexicographic index",
    "aligned stencils", "parallel flux stencil", "perpendicular operator", "boundary fluxes",
    "A3 block inverse", "triple product closed form", "S4 equals E (aligned)",
    "condition-number scaling", "2-norm condition", "Ritz values",
}
OUT_OF_SCOPE = {
    "limit problem solver", "full eigen-spectra of the preconditioned operator",
    "finite-element discretizations", "closed field lines", "3D domains", "distributed single solves",
}

# assembled from pieces so this file does not flag itself
FORBIDDEN = [
    re.compile(p, re.IGNORECASE)
    for p in (
        r"\bthe " + "spec\\b", "spec" + r"\.md", "pap" + "er", "ar" + "xiv", "§", r"\bEq" + r"\.",
        r"\bequation \(?\d", r"\bsection \d", "—",
    )
]


def _table_rows(text, heading=None):
    if heading is not None:
        text = text.split(heading, 1)[1]
    rows = []
    for line in text.splitlines():
        if not line.startswith("|") or set(line) <= set("|- "):
            continue
        rows.append([c.strip() for c in line.strip("|").split("|")])
    return rows[1:]


def _math_map():
    text = (ROOT / "MATH_MAP.md").read_text()
    main, _, scope = text.partition("## Out of scope")
    return _table_rows(main), _table_rows(scope)


def _resolve(dotted):
    parts = dotted.split(".")
    for cut in range(len(parts), 0, -1):
        try:
            obj = importlib.import_module(".".join(parts[:cut]))
        except ModuleNotFoundError:
            continue
        for attr in parts[cut:]:
            obj = getattr(obj, attr)
        return obj
    raise ModuleNotFoundError(dotted)


def test_math_map_topics_present():
    rows, scope = _math_map()
    assert REQUIRED_TOPICS <= {r[0] for r in rows}
    assert OUT_OF_SCOPE <= {r[0] for r in scope}


def test_math_map_symbols_and_tests_exist():
    rows, _ = _math_map()
    for topic, _formula, code, checked in rows:
        symbols = re.findall(r"`(mmapsolve\.[\w.]+)`", code)
        assert symbols, topic
        for s in symbols:
            _resolve(s)
        for t in re.findall(r"`(tests/[\w/]+\.py)`", checked):
            assert (ROOT / t).is_file(), t


def _commands(name):
    return [ln.strip() for ln in (ROOT / name).read_text().splitlines() if ln.strip().startswith("mmapsolve ")]


@pytest.mark.parametrize("doc", ["README.md", "REPRODUCE.md"])
def test_documented_commands_parse(doc):
    parser = build_parser()
    cmds = _commands(doc)
    assert cmds
    for line in cmds:
        parser.parse_args(shlex.split(line)[1:])


def test_reproduce_covers_every_subcommand():
    used = {shlex.split(c)[1] for c in _commands("REPRODUCE.md")}
    assert used == {"solve", "table", "noinflow", "cond", "ritz", "verify"}


def test_forbidden_wording():
    me = Path(__file__).resolve()
    files = [p for p in (ROOT / "src").rglob("*.py")]
    files += [p for p in (ROOT / "tests").rglob("*.py") if p.resolve() != me]
    files += [ROOT / d for d in DOCS] + [ROOT / "pyproject.toml"]
    hits = []
    for f in files:
        for k, line in enumerate(f.read_text().splitlines(), 1):
            hits += [f"{f.relative_to(ROOT)}:{k}: {line.strip()}" for pat in FORBIDDEN if pat.search(line)]
    assert not hits, "\n".join(hits)
