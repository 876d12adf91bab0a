"""Regenerate the replay transcripts under fixtures/replays from the corpus.

Run from the repository root: ``python scripts/make_replays.py``.

Each function's entries are keyed on a marker line that appears only in
that function's source, so one transcript scripts the whole corpus.
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
OUT = ROOT / "fixtures" / "replays"

# Compiles nowhere: the import is never used.
BROKEN_IMPORT = 'import "errors"\n'


def offline_functions() -> list[Path]:
    return [d for d in sorted(CORPUS.iterdir()) if not json.loads((d / "meta.json").read_text())["network"]]


def marker(text: str, others: list[str]) -> str:
    """Longest line of ``text`` that occurs in no other source."""
    for line in sorted({ln.strip() for ln in text.splitlines()}, key=len, reverse=True):
        if line and not any(line in o for o in others):
            return line
    raise SystemExit("no unique marker line")


def with_unused_import(go: str) -> str:
    head, _, rest = go.partition("\n")
    return f"{head}\n\n{BROKEN_IMPORT}{rest}"


def fenced(code: str, tag: str = "go") -> str:
    return f"```{tag}\n{code.rstrip()}\n```"


def documentation(title: str) -> str:
    return (
        f"<think>Read the handler carefully before describing it.</think>\n"
        f"This function implements: {title.lower()}. It reads the fields of the incoming event, "
        f"validates them, and returns a JSON object. Error responses carry an `error` string."
    )


def main() -> None:
    funcs = offline_functions()
    py = {d.name: (d / "original" / "handler.py").read_text() for d in funcs}
    go = {d.name: (d / "reference" / "main.go").read_text() for d in funcs}
    fix_loop, never_compiles, align_loop = [], [], []
    for d in funcs:
        name = d.name
        title = json.loads((d / "meta.json").read_text())["title"]
        py_mark = marker(py[name], [v for k, v in py.items() if k != name] + list(go.values()))
        go_mark = marker(go[name], [v for k, v in go.items() if k != name] + list(py.values()))
        broken = with_unused_import(go[name])
        fix_loop += [
            {"template_id": "document", "attempt": None, "prompt_contains": py_mark,
             "response_text": documentation(title)},
            {"template_id": "translate", "attempt": None, "prompt_contains": py_mark,
             "response_text": "Here is the translation.\n\n" + fenced(broken)},
            {"template_id": "fix-build", "attempt": None, "prompt_contains": go_mark,
             "response_text": "The import of errors was unused; removed it.\n\n"
             + fenced("go build ./...", "sh") + "\n\nCorrected file:\n\n" + fenced(go[name])},
        ]
        never_compiles += [
            {"template_id": "document", "attempt": None, "prompt_contains": py_mark,
             "response_text": documentation(title)},
            {"template_id": "translate", "attempt": None, "prompt_contains": py_mark,
             "response_text": fenced(broken)},
        ]
        for attempt in (1, 2, 3):
            # each "fix" is a different, still broken candidate
            never_compiles.append(
                {"template_id": "fix-build", "attempt": attempt, "prompt_contains": go_mark,
                 "response_text": fenced(with_unused_import(go[name]) + f"\nvar _ = undefinedHelper{attempt}()\n")}
            )
    # align loop for the hello-world function: builds, but the greeting lacks "!"
    hello = "f01_hello_world"
    wrong = go[hello].replace('"!"', '"."')
    hello_mark = marker(py[hello], [v for k, v in py.items() if k != hello])
    align_loop += [
        {"template_id": "document", "attempt": None, "prompt_contains": hello_mark,
         "response_text": documentation("hello world")},
        {"template_id": "translate", "attempt": None, "prompt_contains": hello_mark, "response_text": fenced(wrong)},
        {"template_id": "align", "attempt": None, "prompt_contains": hello_mark, "response_text": fenced(go[hello])},
    ]
    always_fail = [
        {"template_id": t, "attempt": None,
         "response_text": "I am sorry, but I cannot produce that code. Translating between languages "
         "requires a careful analysis that is beyond this answer."}
        for t in ("document", "translate", "fix-build", "align")
    ]
    OUT.mkdir(parents=True, exist_ok=True)
    for fname, doc in [
        ("fix_loop.replay.json", fix_loop),
        ("never_compiles.replay.json", never_compiles),
        ("align_loop.replay.json", align_loop),
        ("always_fail.replay.json", always_fail),
    ]:
        (OUT / fname).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        print(f"wrote {fname} ({len(doc)} entries)")


if __name__ == "__main__":
    main()
