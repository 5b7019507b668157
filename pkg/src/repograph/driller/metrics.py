"""Lightweight function detection and per-function code metrics.

Follows the conventions of the lizard analyzer: cyclomatic complexity is one
plus the number of branch tokens, NLOC counts lines holding code tokens
(comments, blank lines and docstrings excluded), and nested functions are
measured separately from their parents.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

# bump when any counting rule changes; it is part of the cache fingerprint
METRICS_VERSION = 1

LANGUAGE_BY_EXTENSION = {
    "py": "python", "pyw": "python", "pyi": "python",
    "c": "c_family", "h": "c_family", "cc": "c_family", "cpp": "c_family", "cxx": "c_family",
    "hpp": "c_family", "hh": "c_family", "hxx": "c_family", "java": "c_family",
    "go": "go",
    "js": "javascript", "jsx": "javascript", "mjs": "javascript", "cjs": "javascript",
    "ts": "javascript", "tsx": "javascript",
}

_COMMON_BRANCHES = frozenset({"if", "for", "while", "case", "catch", "&&", "||", "?"})
BRANCH_TOKENS = {
    "python": frozenset({"if", "elif", "for", "while", "except", "and", "or"}),
    "c_family": _COMMON_BRANCHES,
    "go": _COMMON_BRANCHES,
    "javascript": _COMMON_BRANCHES,
}


def language_for_path(path: str) -> Optional[str]:
    segment = path.rsplit("/", 1)[-1]
    if "." not in segment:
        return None
    return LANGUAGE_BY_EXTENSION.get(segment.rsplit(".", 1)[1].lower())


@dataclass
class Token:
    text: str
    kind: str  # name | num | str | op | pre | doc | kw
    line: int
    end_line: int
    pos: int
    end: int
    starts_line: bool = False
    indent: int = 0


@dataclass
class MethodDecl:
    name: str
    long_name: str
    start_line: int
    end_line: int
    complexity: int
    nloc: int
    token_count: int
    parameter_count: int

    def metrics(self) -> dict:
        return {
            "complexity": self.complexity,
            "nloc": self.nloc,
            "token_count": self.token_count,
            "parameter_count": self.parameter_count,
        }


# -- scanners --

_PY_RE = re.compile(
    r"""
     (?P<ws>[ \t\f]+)
    |(?P<nl>\r?\n|\r)
    |(?P<cont>\\\r?\n)
    |(?P<comment>\#[^\r\n]*)
    |(?P<str>[rRbBuUfF]{0,2}(?:'''(?:\\.|[^\\])*?'''|\"\"\"(?:\\.|[^\\])*?\"\"\"|'(?:\\.|[^\\'\r\n])*'|"(?:\\.|[^\\"\r\n])*"))
    |(?P<name>[^\W\d]\w*)
    |(?P<num>\d[\w.]*|\.\d\w*)
    |(?P<op>\*\*=?|//=?|>>=?|<<=?|->|:=|\.\.\.|[-+*/%&|^@=!<>]=|\S)
    """,
    re.VERBOSE | re.DOTALL,
)

_BRACE_RE = re.compile(
    r"""
     (?P<ws>[ \t\f\v]+)
    |(?P<nl>\r?\n|\r)
    |(?P<comment>//[^\r\n]*|/\*.*?(?:\*/|\Z))
    |(?P<str>"(?:\\.|[^\\"\r\n])*"|'(?:\\.|[^\\'\r\n])*'|`(?:\\.|[^\\`])*`)
    |(?P<name>[A-Za-z_$][\w$]*)
    |(?P<num>\d[\w.]*|\.\d\w*)
    |(?P<op>>>>=|\.\.\.|->|::|=>|&&|\|\||\?\?|\?\.|==|!=|<=|>=|\+\+|--|[-+*/%&|^]=|\S)
    """,
    re.VERBOSE | re.DOTALL,
)

_JS_REGEX = re.compile(r"/(?:\\.|\[(?:\\.|[^\]\\\r\n])*\]|[^/\\\r\n\[])+/[A-Za-z]*")
_PREPROCESSOR = re.compile(r"[ \t]*#(?:[^\r\n\\]|\\.)*", re.DOTALL)
_REGEX_AFTER = frozenset("( , = : [ ! & | ? { } ; + - * % < > ~ ^ => && || ?? == != === !== <= >=".split())
_REGEX_AFTER_WORDS = frozenset({"return", "typeof", "case", "in", "of", "new", "delete", "void", "throw", "yield", "await"})
_C_EXTENSIONS = frozenset({"c", "h", "cc", "cpp", "cxx", "hpp", "hh", "hxx"})


def _indent_width(prefix: str) -> int:
    width = 0
    for ch in prefix:
        width = (width // 8 + 1) * 8 if ch == "\t" else width + 1
    return width


def scan_python(source: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    depth = 0
    at_line_start = True
    logical_first: Optional[Token] = None
    logical: list[Token] = []

    def end_logical():
        # a logical line holding only string literals is a docstring/comment
        if logical and all(t.kind == "str" for t in logical):
            for t in logical:
                t.kind = "doc"
        if logical and logical[0].text == "case" and logical[-1].text == ":" and len(logical) > 2:
            if logical[1].text not in ("=", ".", ":", ",") and not logical[1].text.endswith("="):
                logical[0].kind = "kw"
        logical.clear()

    for m in _PY_RE.finditer(source):
        kind = m.lastgroup
        text = m.group()
        if kind == "ws" or kind == "comment":
            continue
        if kind in ("nl", "cont"):
            if kind == "nl" and depth == 0:
                end_logical()
                at_line_start = True
            line += 1
            line_start = m.end()
            continue
        end_line = line + text.count("\n") if kind == "str" else line
        tok = Token(text, kind, line, end_line, m.start(), m.end())
        if at_line_start:
            tok.starts_line = True
            tok.indent = _indent_width(source[line_start:m.start()])
            at_line_start = False
            logical_first = tok
        else:
            tok.indent = logical_first.indent if logical_first else 0
        if kind == "op":
            if text in "([{":
                depth += 1
            elif text in ")]}":
                depth = max(0, depth - 1)
        if kind == "str" and "\n" in text:
            line = end_line
            line_start = text.rfind("\n") + 1 + m.start()
        tokens.append(tok)
        logical.append(tok)
    end_logical()
    return tokens


def scan_braces(source: str, language: str, c_preprocessor: bool = False) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    pos = 0
    line_head = True
    n = len(source)
    while pos < n:
        if c_preprocessor and line_head:
            pm = _PREPROCESSOR.match(source, pos)
            if pm and pm.group().strip():
                text = pm.group()
                end_line = line + text.count("\n")
                tokens.append(Token(text.strip(), "pre", line, end_line, pm.start(), pm.end()))
                line = end_line
                pos = pm.end()
                line_head = False
                continue
        if language == "javascript" and source[pos] == "/" and source[pos + 1:pos + 2] not in ("/", "*"):
            prev = tokens[-1] if tokens else None
            if prev is None or (prev.kind == "op" and prev.text in _REGEX_AFTER) or (
                prev.kind == "name" and prev.text in _REGEX_AFTER_WORDS
            ):
                rm = _JS_REGEX.match(source, pos)
                if rm:
                    tokens.append(Token(rm.group(), "str", line, line, rm.start(), rm.end()))
                    pos = rm.end()
                    line_head = False
                    continue
        m = _BRACE_RE.match(source, pos)
        kind = m.lastgroup
        text = m.group()
        pos = m.end()
        if kind == "nl":
            line += 1
            line_head = True
            continue
        if kind == "ws":
            continue
        newlines = text.count("\n")
        if kind == "comment":
            line += newlines
            if newlines:
                line_head = False
            continue
        tokens.append(Token(text, kind, line, line + newlines, m.start(), m.end()))
        line += newlines
        line_head = False
    return tokens


def tokenize(source: str, language: str, path: str = "") -> list[Token]:
    if language == "python":
        return scan_python(source)
    ext = path.rsplit(".", 1)[-1].lower() if "." in path else ""
    return scan_braces(source, language, c_preprocessor=ext in _C_EXTENSIONS or language == "c_family")


# -- complexity --

def cyclomatic_complexity(body_tokens: list[Token], language: str) -> int:
    """1 + number of branch tokens (comments and strings never count)."""
    branches = BRANCH_TOKENS[language]
    count = 0
    for tok in body_tokens:
        if tok.kind in ("str", "doc", "num", "pre"):
            continue
        if tok.text in branches or (language == "python" and tok.kind == "kw" and tok.text == "case"):
            count += 1
    return 1 + count


def count_nloc(tokens: list[Token]) -> int:
    lines = set()
    for tok in tokens:
        if tok.kind == "doc":
            continue
        lines.update(range(tok.line, tok.end_line + 1))
    return len(lines)


def file_nloc(source: str, path: str) -> int:
    """Non-blank, non-comment lines of a file."""
    language = language_for_path(path)
    if language is None:
        return sum(1 for ln in source.splitlines() if ln.strip())
    return count_nloc(tokenize(source, language, path))


# -- function detection --

@dataclass
class _Func:
    name: str
    start_idx: int
    open_paren: int
    close_paren: int
    end_idx: int = -1
    indent: int = 0


def _match(tokens: list[Token], i: int, open_: str, close: str) -> Optional[int]:
    depth = 0
    for j in range(i, len(tokens)):
        text = tokens[j].text
        if tokens[j].kind in ("str", "pre"):
            continue
        if text == open_:
            depth += 1
        elif text == close:
            depth -= 1
            if depth == 0:
                return j
    return None


def _find_python_functions(tokens: list[Token]) -> list[_Func]:
    funcs: list[_Func] = []
    stack: list[_Func] = []
    for i, tok in enumerate(tokens):
        if tok.starts_line:
            while stack and tok.indent <= stack[-1].indent:
                stack.pop().end_idx = i - 1
        if tok.text != "def" or tok.kind != "name":
            continue
        at_statement = tok.starts_line or (i > 0 and tokens[i - 1].text == "async" and tokens[i - 1].starts_line)
        if not at_statement or i + 2 >= len(tokens):
            continue
        name_tok, paren = tokens[i + 1], tokens[i + 2]
        if name_tok.kind != "name" or paren.text != "(":
            continue
        close = _match(tokens, i + 2, "(", ")")
        if close is None:
            continue
        name = name_tok.text
        if stack:
            name = stack[-1].name + "." + name
        func = _Func(name, i + 1, i + 2, close, indent=tok.indent)
        funcs.append(func)
        stack.append(func)
    while stack:
        stack.pop().end_idx = len(tokens) - 1
    return funcs


_C_NOT_FUNCTIONS = frozenset({
    "if", "for", "while", "switch", "catch", "return", "sizeof", "do", "else", "new", "delete", "throw",
    "case", "synchronized", "try", "alignof", "decltype", "typeof", "static_assert", "foreach", "defined",
})
_JS_NOT_FUNCTIONS = frozenset({
    "if", "for", "while", "switch", "catch", "return", "function", "typeof", "do", "else", "new", "delete",
    "throw", "case", "with", "await", "yield", "void", "in", "of", "super", "import",
})
_SCOPE_KEYWORDS = frozenset({"class", "struct", "interface", "enum", "namespace", "union"})


def _c_body_brace(tokens: list[Token], j: int) -> Optional[int]:
    """Index of the body ``{`` after a C-family parameter list, if it is a definition."""
    init_list = False
    n = len(tokens)
    while j < n:
        tok = tokens[j]
        text = tok.text
        if text == "{":
            prev = tokens[j - 1].text
            if init_list and tokens[j - 1].kind == "name" and prev not in ("const", "override", "final", "noexcept"):
                close = _match(tokens, j, "{", "}")
                if close is None:
                    return None
                j = close + 1
                continue
            return j
        if text in (";", "=", "}"):
            return None
        if text == ":":
            init_list = True
        elif text == "(":
            close = _match(tokens, j, "(", ")")
            if close is None:
                return None
            j = close + 1
            continue
        elif not init_list and tok.kind not in ("name", "num") and text not in (
            ",", ".", "::", "&", "&&", "*", "->", "<", ">", "[", "]"
        ):
            return None
        j += 1
    return None


def _ts_body_brace(tokens: list[Token], j: int, arrow: bool) -> Optional[int]:
    """Body ``{`` after a JS parameter list, skipping a TypeScript return annotation."""
    n = len(tokens)
    if j < n and tokens[j].text == ":":
        depth = 0
        j += 1
        while j < n:
            text = tokens[j].text
            if depth == 0 and (text == "=>" or (text == "{" and not arrow and tokens[j - 1].text != ":")):
                break
            if text in ("(", "[", "<", "{"):
                depth += 1
            elif text in (")", "]", ">", "}"):
                depth -= 1
            elif text in (";",):
                return None
            j += 1
    if arrow:
        if j + 1 < n and tokens[j].text == "=>" and tokens[j + 1].text == "{":
            return j + 1
        return None
    if j < n and tokens[j].text == "{":
        return j
    return None


def _assigned_name(tokens: list[Token], i: int) -> tuple[Optional[str], int]:
    """Name a function expression gets from ``name =`` / ``name:`` just before index ``i``."""
    k = i - 1
    if k >= 0 and tokens[k].text == "async":
        k -= 1
    if k >= 1 and tokens[k].text in ("=", ":") and tokens[k - 1].kind == "name":
        return tokens[k - 1].text, k - 1
    return None, i


def _find_brace_functions(tokens: list[Token], language: str) -> list[_Func]:
    funcs: list[_Func] = []
    scopes: list[tuple[str, object]] = []
    pending_scope: Optional[str] = None
    n = len(tokens)
    i = 0

    def open_function(func: _Func, brace: int) -> int:
        funcs.append(func)
        scopes.append(("func", func))
        return brace + 1

    while i < n:
        tok = tokens[i]
        text = tok.text
        if tok.kind in ("str", "pre"):
            i += 1
            continue
        if text == "{":
            scopes.append(("scope", pending_scope) if pending_scope else ("block", None))
            pending_scope = None
            i += 1
            continue
        if text == "}":
            if scopes:
                kind, value = scopes.pop()
                if kind == "func":
                    value.end_idx = i
            i += 1
            continue
        if text == ";":
            pending_scope = None
        in_func = any(kind == "func" for kind, _ in scopes)
        nxt = tokens[i + 1] if i + 1 < n else None

        if language == "c_family":
            if not in_func and text in _SCOPE_KEYWORDS and tok.kind == "name":
                if nxt is not None and nxt.kind == "name":
                    pending_scope = nxt.text
                i += 1
                continue
            if (not in_func and tok.kind == "name" and nxt is not None and nxt.text == "("
                    and text not in _C_NOT_FUNCTIONS and not (i > 0 and tokens[i - 1].text in ("new", "@"))):
                close = _match(tokens, i + 1, "(", ")")
                brace = _c_body_brace(tokens, close + 1) if close is not None else None
                if brace is not None:
                    start = i
                    name = text
                    if start > 0 and tokens[start - 1].text == "~":
                        start -= 1
                        name = "~" + name
                    while start >= 2 and tokens[start - 1].text == "::" and tokens[start - 2].kind == "name":
                        name = tokens[start - 2].text + "::" + name
                        start -= 2
                    prefix = [value for kind, value in scopes if kind == "scope"]
                    if prefix:
                        name = "::".join(prefix) + "::" + name
                    pending_scope = None
                    i = open_function(_Func(name, start, i + 1, close), brace)
                    continue
            i += 1
            continue

        if language == "go":
            if text == "func" and nxt is not None:
                if nxt.kind == "name" and i + 2 < n and tokens[i + 2].text == "(":
                    name, open_ = nxt.text, i + 2
                elif nxt.text == "(":
                    recv_close = _match(tokens, i + 1, "(", ")")
                    if recv_close is None:
                        i += 1
                        continue
                    after = tokens[recv_close + 1] if recv_close + 1 < n else None
                    if after is not None and after.kind == "name" and recv_close + 2 < n and tokens[recv_close + 2].text == "(":
                        name, open_ = after.text, recv_close + 2
                    else:
                        name, open_ = "(anonymous)", i + 1
                else:
                    i += 1
                    continue
                close = _match(tokens, open_, "(", ")")
                if close is None:
                    i += 1
                    continue
                j = close + 1
                brace = None
                while j < n:
                    t = tokens[j].text
                    if t == "{":
                        if tokens[j - 1].text in ("interface", "struct"):
                            end = _match(tokens, j, "{", "}")
                            if end is None:
                                break
                            j = end + 1
                            continue
                        brace = j
                        break
                    if t == "(":
                        end = _match(tokens, j, "(", ")")
                        if end is None:
                            break
                        j = end + 1
                        continue
                    if t in (";", "}", ")", "=") or tokens[j].line > tokens[close].line + 5:
                        break
                    j += 1
                if brace is not None:
                    i = open_function(_Func(name, i, open_, close), brace)
                    continue
            i += 1
            continue

        # javascript / typescript
        if text == "function" and tok.kind == "name":
            j = i + 1
            if j < n and tokens[j].text == "*":
                j += 1
            if j < n and tokens[j].kind == "name":
                name, start, open_ = tokens[j].text, j, j + 1
            else:
                assigned, start = _assigned_name(tokens, i)
                name, open_ = assigned or "(anonymous)", j
                if assigned is None:
                    start = i
            if open_ < n and tokens[open_].text == "(":
                close = _match(tokens, open_, "(", ")")
                brace = _ts_body_brace(tokens, close + 1, arrow=False) if close is not None else None
                if brace is not None:
                    i = open_function(_Func(name, start, open_, close), brace)
                    continue
        elif text == "(":
            close = _match(tokens, i, "(", ")")
            if close is not None:
                brace = _ts_body_brace(tokens, close + 1, arrow=True)
                if brace is not None:
                    assigned, start = _assigned_name(tokens, i)
                    if assigned is None:
                        start = i
                    i = open_function(_Func(assigned or "(anonymous)", start, i, close), brace)
                    continue
        elif tok.kind == "name" and nxt is not None:
            if nxt.text == "=>" and i + 2 < n and tokens[i + 2].text == "{":
                assigned, start = _assigned_name(tokens, i)
                if assigned is None:
                    start = i
                i = open_function(_Func(assigned or "(anonymous)", start, i - 1, i + 1), i + 2)
                continue
            if nxt.text == "(" and text not in _JS_NOT_FUNCTIONS and not (i > 0 and tokens[i - 1].text in (".", "new")):
                close = _match(tokens, i + 1, "(", ")")
                brace = _ts_body_brace(tokens, close + 1, arrow=False) if close is not None else None
                if brace is not None:
                    i = open_function(_Func(text, i, i + 1, close), brace)
                    continue
        i += 1
    for func in funcs:
        if func.end_idx < 0:
            func.end_idx = n - 1
    return funcs


def _split_params(tokens: list[Token], language: str) -> list[list[Token]]:
    groups: list[list[Token]] = [[]]
    depth = 0
    angle = language == "c_family"
    for tok in tokens:
        text = tok.text
        if tok.kind not in ("str", "doc"):
            if text in ("(", "[", "{") or (angle and text == "<"):
                depth += 1
            elif text in (")", "]", "}") or (angle and text == ">"):
                depth -= 1
            elif text == "," and depth == 0:
                groups.append([])
                continue
        groups[-1].append(tok)
    return [g for g in groups if g]


def _parameter_count(params: list[Token], language: str) -> int:
    groups = _split_params(params, language)
    if language == "c_family" and len(groups) == 1 and [t.text for t in groups[0]] == ["void"]:
        return 0
    if language == "python":
        groups = [g for g in groups if [t.text for t in g] not in (["*"], ["/"])]
    return len(groups)


def detect_methods(source: str, language: str, path: str = "") -> list[MethodDecl]:
    """Every function definition in ``source`` with its metrics."""
    if language not in BRANCH_TOKENS or not source:
        return []
    tokens = tokenize(source, language, path)
    if language == "python":
        funcs = _find_python_functions(tokens)
    else:
        funcs = _find_brace_functions(tokens, language)
    if not funcs:
        return []

    owned: dict[int, list[Token]] = {id(f): [] for f in funcs}
    ordered = sorted(funcs, key=lambda f: (f.start_idx, -f.end_idx))
    stack: list[_Func] = []
    k = 0
    for idx, tok in enumerate(tokens):
        while stack and stack[-1].end_idx < idx:
            stack.pop()
        while k < len(ordered) and ordered[k].start_idx <= idx:
            stack.append(ordered[k])
            k += 1
            while stack and stack[-1].end_idx < idx:
                stack.pop()
        if stack:
            owned[id(stack[-1])].append(tok)

    decls = []
    for func in funcs:
        own = owned[id(func)]
        params = tokens[func.open_paren + 1:func.close_paren]
        raw = source[tokens[func.open_paren].end:tokens[func.close_paren].pos]
        long_name = func.name + "(" + " ".join(raw.split()) + ")"
        start_line = tokens[func.start_idx].line
        if language == "python" and func.start_idx > 0:
            start_line = tokens[func.start_idx - 1].line
        end_tok = tokens[func.end_idx]
        decls.append(MethodDecl(
            name=func.name,
            long_name=long_name,
            start_line=start_line,
            end_line=max(end_tok.end_line, start_line),
            complexity=cyclomatic_complexity(own, language),
            nloc=count_nloc(own),
            token_count=sum(1 for t in own if t.kind != "doc"),
            parameter_count=_parameter_count(params, language),
        ))
    decls.sort(key=lambda d: (d.start_line, d.end_line, d.long_name))
    return decls
