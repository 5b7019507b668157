"""Regenerate tests/data/metrics_golden.json with lizard (run once, offline).

lizard is not a dependency of the package or of the test-suite; the test
reads the frozen JSON only.

    pip install lizard==1.24.1
    python scripts/make_metrics_golden.py
"""
import json
from pathlib import Path

import lizard

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "tests" / "data" / "metrics_corpus"
OUT = ROOT / "tests" / "data" / "metrics_golden.json"


def main():
    rows = []
    for path in sorted(CORPUS.iterdir()):
        for fn in lizard.analyze_file(str(path)).function_list:
            rows.append({
                "file": path.name,
                "name": fn.name,
                "start_line": fn.start_line,
                "end_line": fn.end_line,
                "ccn": fn.cyclomatic_complexity,
                "nloc": fn.nloc,
                "parameter_count": fn.parameter_count,
            })
    doc = {"tool": "lizard", "version": lizard.version, "functions": rows}
    OUT.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} functions to {OUT}")


if __name__ == "__main__":
    main()
