from dataclasses import dataclass

from .errors import MiniCSyntaxError

KEYWORDS = {
    "int", "char", "void", "const", "static", "if", "else", "while", "for",
    "return", "break", "continue", "sizeof", "NULL",
}

# longest first
PUNCT = [
    "++", "--", "+=", "-=", "==", "!=", "<=", ">=", "&&", "||",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "&",
    "(", ")", "{", "}", "[", "]", ";", ",",
]

ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34, "a": 7,
           "b": 8, "f": 12, "v": 11, "?": 63}


@dataclass
class Token:
    kind: str  # ident, kw, int, char, str, punct, comment, eof
    text: str
    line: int
    col: int
    value: object = None


def _unescape(body, line, col):
    out = bytearray()
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.extend(ch.encode("utf-8"))
            i += 1
            continue
        i += 1
        if i >= len(body):
            raise MiniCSyntaxError("dangling escape", line, col)
        esc = body[i]
        if esc == "x":
            j = i + 1
            while j < len(body) and body[j] in "0123456789abcdefABCDEF":
                j += 1
            if j == i + 1:
                raise MiniCSyntaxError("bad hex escape", line, col)
            out.append(int(body[i + 1:j], 16) & 0xFF)
            i = j
        elif esc in "01234567":
            j = i
            while j < len(body) and j < i + 3 and body[j] in "01234567":
                j += 1
            out.append(int(body[i:j], 8) & 0xFF)
            i = j
        elif esc in ESCAPES:
            out.append(ESCAPES[esc])
            i += 1
        else:
            raise MiniCSyntaxError(f"unknown escape \\{esc}", line, col)
    return bytes(out)


def tokenize(text):
    """Split MiniC source into tokens. Comments are kept as tokens."""
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k):
        nonlocal i, line, col
        for ch in text[i:i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = text[i]
        if ch in " \t\r\n\f\v":
            advance(1)
            continue
        start_line, start_col = line, col
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise MiniCSyntaxError("unterminated comment", line, col, "*/")
            tokens.append(Token("comment", text[i:end + 2], start_line, start_col))
            advance(end + 2 - i)
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            end = n if end < 0 else end
            tokens.append(Token("comment", text[i:end].rstrip(), start_line, start_col))
            advance(end - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, start_line, start_col))
            advance(j - i)
            continue
        if ch.isdigit():
            j = i
            if text.startswith(("0x", "0X"), i):
                j = i + 2
                while j < n and text[j] in "0123456789abcdefABCDEF":
                    j += 1
                value = int(text[i:j], 16)
            else:
                while j < n and text[j].isdigit():
                    j += 1
                value = int(text[i:j])
            if j < n and (text[j].isalpha() or text[j] == "_"):
                raise MiniCSyntaxError("malformed number", start_line, start_col)
            tokens.append(Token("int", text[i:j], start_line, start_col, value))
            advance(j - i)
            continue
        if ch in "'\"":
            j = i + 1
            while j < n and text[j] != ch:
                if text[j] == "\n":
                    break
                j += 2 if text[j] == "\\" else 1
            if j >= n or text[j] != ch:
                raise MiniCSyntaxError("unterminated literal", start_line, start_col, ch)
            raw = text[i:j + 1]
            data = _unescape(text[i + 1:j], start_line, start_col)
            if ch == "'":
                if len(data) != 1:
                    raise MiniCSyntaxError("bad character literal", start_line, start_col)
                tokens.append(Token("char", raw, start_line, start_col, data[0]))
            else:
                tokens.append(Token("str", raw, start_line, start_col, data))
            advance(j + 1 - i)
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("punct", p, start_line, start_col))
                advance(len(p))
                break
        else:
            raise MiniCSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens
