"""Best-effort extraction of declaration headers from source text.

This is a deliberate line-grammar, not a parser: a line opens a
declaration if it matches a language-specific pattern, and the signature
runs from the match through the closing parenthesis of the parameter
list (balanced across lines). Unknown syntax yields an empty or partial
list; this function never fails.
"""
from __future__ import annotations

import re

_KOTLIN_MODS = r"(?:public|private|protected|internal|open|override|suspend|inline|operator|infix|tailrec|external|abstract|final)"
_KOTLIN = re.compile(rf"^(?:{_KOTLIN_MODS}\s+)*fun\s+[A-Za-z_]\w*\s*\(")

_PYTHON = re.compile(r"^(?:async\s+)?def\s+[A-Za-z_]\w*\s*\(")

_JAVA_MODS = r"(?:public|private|protected|static|final|abstract|synchronized|native|strictfp|default)"
# Requires at least one modifier (or a void return type) so that plain
# call statements do not match the <modifiers> <type> <ident>(...) shape.
_JAVA_GUARD = re.compile(rf"^(?:(?:{_JAVA_MODS}\s+)+|void\s+)")
_JAVA_HEAD = re.compile(r"[\w<>\[\],.]+\s+[A-Za-z_]\w*\s*\(|^void\s+[A-Za-z_]\w*\s*\(")

LANGUAGES = ("kotlin", "java", "python", "generic")


def _match(line: str, language: str) -> bool:
    if language == "kotlin":
        return _KOTLIN.match(line) is not None
    if language == "python":
        return _PYTHON.match(line) is not None
    if language == "java":
        return _JAVA_GUARD.match(line) is not None and _JAVA_HEAD.search(line) is not None
    # generic: any of the above
    return any(_match(line, lang) for lang in ("kotlin", "python", "java"))


def extract_signatures(source: str, language_hint: str = "generic") -> list[str]:
    """Return declaration headers in source order."""
    if language_hint not in LANGUAGES:
        language_hint = "generic"
    signatures: list[str] = []
    lines = source.splitlines()
    i = 0
    while i < len(lines):
        stripped = lines[i].lstrip()
        if not _match(stripped, language_hint):
            i += 1
            continue
        # Collect text through the parameter list's closing paren,
        # spanning lines if needed.
        collected: list[str] = []
        depth = 0
        done = False
        j = i
        while j < len(lines) and not done:
            text = lines[j].lstrip() if j == i else lines[j].strip()
            out = []
            for ch in text:
                out.append(ch)
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    depth -= 1
                    if depth == 0:
                        done = True
                        break
            collected.append("".join(out))
            j += 1
        if done:
            signatures.append(" ".join(part for part in collected if part))
            i = j
        else:
            i += 1  # unbalanced parens: skip the opener, keep scanning
    return signatures
