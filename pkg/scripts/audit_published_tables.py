"""Consistency audit of the published test-set rows.

    python3 scripts/audit_published_tables.py

For each row, checks reported accuracy against the correct/incorrect counts and
the overall recall against accuracy, then recomputes the Task 1 weighted F1
from supports derived from the per-class recalls.
"""

import json

from codemix_off.corpus import Label
from codemix_off.metrics import PUBLISHED_TEST, audit_report, derive_supports, published_report, weighted_from_supports


def main():
    failed = 0
    for key, row in PUBLISHED_TEST.items():
        correct, incorrect = row["counts"]
        result = audit_report(published_report(key), correct, incorrect)
        failed += not result.passed
        print(key, json.dumps(result.to_json()))

    row = PUBLISHED_TEST["task1_ta"]
    correct, incorrect = row["counts"]
    supports = derive_supports({Label.NOT: row["not"][1], Label.OFF: row["off"][1]}, correct, correct + incorrect)
    f1 = weighted_from_supports({Label.NOT: row["not"][2], Label.OFF: row["off"][2]}, supports)
    print(f"task1_ta derived supports NOT={supports[Label.NOT]} OFF={supports[Label.OFF]} "
          f"weighted F1={f1:.6f} (published {row['overall'][2]})")
    print(f"{failed} row(s) failed the audit")


if __name__ == "__main__":
    main()
