"""Regenerate the files under tests/fixtures.

The transliteration golden files are spelled out here as sequences of Unicode
character names, so they do not depend on the engine or on the rule tables
they are meant to check:

    python3 scripts/make_fixtures.py
"""

import unicodedata
from pathlib import Path

from codemix_off.corpus import Dataset, Label, Language, Sample, Task, save_dataset
from codemix_off.synthetic import separable_corpus, write_count_fixtures
from codemix_off.translate import read_fixture

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

# "KA" consonant with inherent vowel, "KA." consonant + virama, "KA+AA" consonant +
# vowel sign, "V:A" independent vowel
TAMIL_GOLDEN = {
    "amma": "V:A MA. MA",
    "appa": "V:A PA. PA",
    "vanakkam": "VA NNNA KA. KA MA.",
    "nanri": "NNNA NNNA. RA+I",
    "padam": "PA TTA MA.",
    "paaru": "PA+AA RA+U",
    "kaadhal": "KA+AA TA LA.",
    "thambi": "TA MA. PA+I",
    "akka": "V:A KA. KA",
    "tamizh": "TTA MA+I LLLA.",
    "naan": "NNNA+AA NNNA.",
    "avan": "V:A VA NNNA.",
    "romba": "RA+O MA. PA",
    "nalla": "NNNA LA. LA",
    "semma": "CA+E MA. MA",
    "kevalam": "KA+E VA LA MA.",
    "loosu": "LA+UU CA+U",
    "illai": "V:I LA. LA+AI",
    "ooru": "V:UU RA+U",
    "veedu": "VA+II TTA+U",
}

MALAYALAM_GOLDEN = {
    "amma": "V:A MA. MA",
    "achan": "V:A CA NA.",
    "chettan": "CA+E TTA. TTA NA.",
    "kutti": "KA+U TTA. TTA+I",
    "nalla": "NA LA. LA",
    "padam": "PA DDA MA.",
    "veedu": "VA+II DDA+U",
    "vellam": "VA+E LA. LA MA.",
    "kadal": "KA DDA LA.",
    "mazha": "MA LLLA",
    "pani": "PA NA+I",
    "thala": "TA LA",
    "kannu": "KA NA. NA+U",
    "ente": "V:E NA. TTA+E",
    "ningal": "NA+I NGA LA.",
    "sneham": "SA. NA+E HA MA.",
    "bhasha": "BHA SHA",
    "katha": "KA TA",
    "kaalam": "KA+AA LA MA.",
    "mol": "MA+O LA.",
}


def spell(script: str, names: str) -> str:
    out = []
    for token in names.split():
        if token.startswith("V:"):
            out.append(unicodedata.lookup(f"{script} LETTER {token[2:]}"))
            continue
        virama = token.endswith(".")
        base, _, sign = token.rstrip(".").partition("+")
        out.append(unicodedata.lookup(f"{script} LETTER {base}"))
        if sign:
            out.append(unicodedata.lookup(f"{script} VOWEL SIGN {sign}"))
        if virama:
            out.append(unicodedata.lookup(f"{script} SIGN VIRAMA"))
    return "".join(out)


def write_golden(path: Path, script: str, table: dict) -> None:
    lines = [f"# roman<TAB>expected {script.lower()} text, spelled from Unicode character names"]
    lines += [f"{roman}\t{spell(script, names)}" for roman, names in table.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_translation_corpus(directory: Path) -> None:
    """A small Malayalam corpus with unique texts plus a fixture-provider table."""
    bundled = Path(__file__).resolve().parents[1] / "src" / "codemix_off" / "data" / "example_translations.tsv"
    table = read_fixture(bundled.read_text(encoding="utf-8"))
    samples = [Sample(f"ex{i}", src, Label.NOT, Language.ML) for i, src in enumerate(table)]
    synthetic, glosses = separable_corpus(40, Language.ML, seed=7)
    seen = set(table)
    for s in synthetic.samples:
        if s.text not in seen:
            seen.add(s.text)
            samples.append(s)
            table[s.text] = glosses[s.id]
    save_dataset(Dataset(tuple(samples), Task.TASK2, Language.ML), directory / "translation_corpus.tsv")
    lines = ["# source<TAB>translation"] + [f"{src}\t{tgt}" for src, tgt in table.items()]
    (directory / "translation_fixture.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_golden(FIXTURES / "translit_golden_ta.tsv", "TAMIL", TAMIL_GOLDEN)
    write_golden(FIXTURES / "translit_golden_ml.tsv", "MALAYALAM", MALAYALAM_GOLDEN)
    write_count_fixtures(FIXTURES / "counts")
    write_translation_corpus(FIXTURES)


if __name__ == "__main__":
    main()
