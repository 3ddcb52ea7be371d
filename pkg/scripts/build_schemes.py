"""Regenerate the bundled Roman -> Tamil / Malayalam rule tables.

Every consonant is expanded against every vowel so the tables are flat
``roman<TAB>native`` rewrite rules usable by a plain longest-match engine:

    python scripts/build_schemes.py
"""

from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "codemix_off" / "data"

# roman -> (independent vowel, vowel sign); the inherent vowel has an empty sign
TAMIL_VOWELS = {
    "a": ("அ", ""),
    "aa": ("ஆ", "ா"),
    "i": ("இ", "ி"),
    "ii": ("ஈ", "ீ"),
    "ee": ("ஈ", "ீ"),
    "u": ("உ", "ு"),
    "uu": ("ஊ", "ூ"),
    "oo": ("ஊ", "ூ"),
    "e": ("எ", "ெ"),
    "ae": ("ஏ", "ே"),
    "ai": ("ஐ", "ை"),
    "o": ("ஒ", "ொ"),
    "oa": ("ஓ", "ோ"),
    "au": ("ஔ", "ௌ"),
}
TAMIL_VIRAMA = "்"
TAMIL_CONSONANTS = {
    "k": "க", "g": "க", "q": "க",
    "ng": "ங",
    "c": "ச", "ch": "ச", "s": "ச",
    "j": "ஜ",
    "nj": "ஞ",
    "t": "ட", "d": "ட",
    "th": "த", "dh": "த",
    "n": "ன",
    "p": "ப", "b": "ப",
    "f": "ஃப",
    "m": "ம",
    "y": "ய",
    "r": "ர",
    "l": "ல",
    "zh": "ழ", "z": "ழ",
    "v": "வ", "w": "வ",
    "sh": "ஷ",
    "h": "ஹ",
    "x": "க்ஸ",
}

MALAYALAM_VOWELS = {
    "a": ("അ", ""),
    "aa": ("ആ", "ാ"),
    "i": ("ഇ", "ി"),
    "ii": ("ഈ", "ീ"),
    "ee": ("ഈ", "ീ"),
    "u": ("ഉ", "ു"),
    "uu": ("ഊ", "ൂ"),
    "oo": ("ഊ", "ൂ"),
    "e": ("എ", "െ"),
    "ae": ("ഏ", "േ"),
    "ai": ("ഐ", "ൈ"),
    "o": ("ഒ", "ൊ"),
    "oa": ("ഓ", "ോ"),
    "au": ("ഔ", "ൌ"),
}
MALAYALAM_VIRAMA = "്"
MALAYALAM_CONSONANTS = {
    "k": "ക", "c": "ക", "q": "ക",
    "kh": "ഖ",
    "g": "ഗ",
    "gh": "ഘ",
    "ng": "ങ",
    "ch": "ച",
    "chh": "ഛ",
    "j": "ജ",
    "jh": "ഝ",
    "nj": "ഞ",
    "t": "ട",
    "d": "ഡ",
    "th": "ത",
    "dh": "ദ",
    "n": "ന",
    "p": "പ",
    "ph": "ഫ", "f": "ഫ",
    "b": "ബ",
    "bh": "ഭ",
    "m": "മ",
    "y": "യ",
    "r": "ര",
    "l": "ല",
    "zh": "ഴ",
    "v": "വ", "w": "വ",
    "sh": "ശ",
    "s": "സ", "z": "സ",
    "h": "ഹ",
    "x": "ക്സ",
}


def expand(vowels, consonants, virama):
    rules = {}
    for roman, (independent, _sign) in vowels.items():
        rules[roman] = independent
    for c_roman, base in consonants.items():
        rules[c_roman] = base + virama
        for v_roman, (_independent, sign) in vowels.items():
            rules[c_roman + v_roman] = base + sign
    return rules


def write(path, name, target, rules):
    lines = [
        f"# scheme: {name}",
        f"# target: {target}",
        "# roman<TAB>native, applied longest-match-first; generated by scripts/build_schemes.py",
    ]
    for roman in sorted(rules, key=lambda r: (len(r), r)):
        lines.append(f"{roman}\t{rules[roman]}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    write(DATA / "tamil.tsv", "informal-tamil", "tamil", expand(TAMIL_VOWELS, TAMIL_CONSONANTS, TAMIL_VIRAMA))
    write(
        DATA / "malayalam.tsv",
        "informal-malayalam",
        "malayalam",
        expand(MALAYALAM_VOWELS, MALAYALAM_CONSONANTS, MALAYALAM_VIRAMA),
    )


if __name__ == "__main__":
    main()
