"""Character classes and forward maximum matching, written independently of
the C++ segmenter for use by the oracle scripts."""

import string

ASCII_PUNCT = set(string.punctuation)


def is_han(ch):
    cp = ord(ch)
    return (0x3400 <= cp <= 0x4DBF or 0x4E00 <= cp <= 0x9FFF or 0xF900 <= cp <= 0xFAFF
            or 0x20000 <= cp <= 0x2FA1F or cp == 0x3007)


def is_space(ch):
    return (ch in " \t\n\r\v\f\u0085\u00a0\u1680\u2028\u2029\u202f\u205f\u3000"
            or "\u2000" <= ch <= "\u200a")


def is_punct(ch):
    cp = ord(ch)
    if cp < 0x80:
        return ch in ASCII_PUNCT
    return ((0xA1 <= cp <= 0xBF and cp not in (0xAA, 0xB5, 0xBA)) or 0x2010 <= cp <= 0x2027
            or 0x2030 <= cp <= 0x205E or 0x3001 <= cp <= 0x3003 or 0x3008 <= cp <= 0x3011
            or 0x3014 <= cp <= 0x301F or cp == 0x30FB or 0xFE10 <= cp <= 0xFE19
            or 0xFE30 <= cp <= 0xFE6B or 0xFF01 <= cp <= 0xFF0F or 0xFF1A <= cp <= 0xFF20
            or 0xFF3B <= cp <= 0xFF40 or 0xFF5B <= cp <= 0xFF65)


def other(ch):
    return not is_han(ch) and not is_space(ch) and not is_punct(ch)


def segment(text, dictionary):
    """dictionary: term -> pos. Returns [(surface, pos)]."""
    maxlen = max((len(t) for t in dictionary), default=0)
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if is_space(ch):
            j = i + 1
            while j < len(text) and is_space(text[j]):
                j += 1
            out.append((text[i:j], "x"))
        elif other(ch):
            j = i + 1
            while j < len(text) and other(text[j]):
                j += 1
            out.append((text[i:j], dictionary.get(text[i:j], "x")))
        else:
            j = i + 1
            for length in range(min(maxlen, len(text) - i), 0, -1):
                if text[i:i + length] in dictionary:
                    j = i + length
                    break
            out.append((text[i:j], dictionary.get(text[i:j], "x")))
        i = j
    return out


def load_dict(path):
    d = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line:
                term, pos = line.split("\t")
                d[term] = pos
    return d
