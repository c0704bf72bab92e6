"""
M2: Rule 텍스트 형식

한 줄에 한 rule (TAB 구분):
    r_p1(x,y) & r_p2(y,z) => r_c(x,z)<TAB>confidence<TAB>support<TAB>body_count
    r_p(y,x) => r_c(x,y)<TAB>confidence<TAB>support<TAB>body_count

- support / body_count는 생략 가능 (body_count 생략 시 round(support / confidence))
- relation 토큰: vocabulary가 주어지면 relation 이름, 아니면 정수 id
- '#'로 시작하는 줄과 빈 줄은 무시
"""
import re
from pathlib import Path
from typing import Iterable

from modules.errors import ParseError, VocabularyError
from .rules import Atom, HornRule

_ATOM_RE = re.compile(r"^(?P<rel>.+?)\(\s*(?P<a1>[A-Za-z]\w*)\s*,\s*(?P<a2>[A-Za-z]\w*)\s*\)$")


def _relation_token(rel: int, vocab) -> str:
    return vocab.relations.name_of(rel) if vocab is not None else str(rel)


def format_rule(rule: HornRule, vocab=None) -> str:
    body = " & ".join(f"{_relation_token(a.relation, vocab)}({a.arg1},{a.arg2})" for a in rule.premise)
    c = rule.conclusion
    head = f"{_relation_token(c.relation, vocab)}({c.arg1},{c.arg2})"
    return f"{body} => {head}\t{float(rule.confidence)!r}\t{rule.support}\t{rule.body_count}"


def _parse_atom(text: str, vocab, path: str, line_no: int) -> Atom:
    m = _ATOM_RE.match(text.strip())
    if not m:
        raise ParseError(f"malformed atom {text.strip()!r}", path, line_no)
    token = m.group("rel").strip()
    if vocab is not None:
        try:
            rel = vocab.relations.id_of(token)
        except VocabularyError as e:
            raise VocabularyError(f"{path}:{line_no}: {e}") from None
    else:
        try:
            rel = int(token)
        except ValueError:
            raise ParseError(f"relation {token!r} is not an integer id (no vocabulary given)", path, line_no) from None
    return Atom(rel, m.group("a1"), m.group("a2"))


def parse_rule_line(line: str, vocab=None, path: str = "<string>", line_no: int = 1) -> HornRule:
    fields = line.rstrip("\r\n").split("\t")
    if not 2 <= len(fields) <= 4:
        raise ParseError(f"expected 2-4 tab-separated fields, got {len(fields)}", path, line_no)

    text = fields[0]
    if text.count("=>") != 1:
        raise ParseError("rule must contain exactly one '=>'", path, line_no)
    lhs, rhs = text.split("=>")
    premise = tuple(_parse_atom(a, vocab, path, line_no) for a in lhs.split("&"))
    conclusion = _parse_atom(rhs, vocab, path, line_no)

    try:
        confidence = float(fields[1])
        support = int(fields[2]) if len(fields) > 2 and fields[2].strip() else 0
        if len(fields) > 3 and fields[3].strip():
            body_count = int(fields[3])
        else:
            body_count = max(support, round(support / confidence)) if confidence > 0 else support
    except ValueError as e:
        raise ParseError(f"bad numeric field: {e}", path, line_no) from None

    try:
        return HornRule(premise, conclusion, confidence, support, body_count)
    except ValueError as e:
        raise ParseError(str(e), path, line_no) from None


def parse_rules(path: str | Path, vocab=None) -> list[HornRule]:
    path = Path(path)
    rules = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            rules.append(parse_rule_line(line, vocab, str(path), line_no))
    return rules


def serialize_rules(rules: Iterable[HornRule], path: str | Path, vocab=None) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rule in rules:
            f.write(format_rule(rule, vocab) + "\n")
            count += 1
    return count
