"""The whole pipeline on the bundled corpus, library-first.

pm_check runs per internal variable: type rules, then reduction plus
rules again, then counting on whatever stays unknown. qms_compute adds
a strength for every variable the pipeline could close. The CLI wraps
exactly these two calls.
"""

from maskcheck import (
    EngineConfig,
    corpus_dir,
    make_domain,
    parse,
    pretty,
    qms_compute,
    report_to_json,
)
from maskcheck.cli import run

cfg = EngineConfig(make_domain(8))

for stem in ("cube", "cube_fixed", "secmult"):
    p = parse((corpus_dir() / f"{stem}.mv").read_text())
    report = qms_compute(p, cfg)
    verdict = "perfectly masked" if report.perfectly_masked else "LEAKY"
    print(f"{p.name}: {verdict}, totals {report.totals}")
    for v in report.verdicts:
        qms = "" if v.qms is None else f"  QMS {v.qms.num}/{v.qms.den}"
        print(f"  {v.name:3} {v.dist} via {v.method}{qms}")
    if report.program_qms is not None:
        print(f"  program QMS: "
              f"{report.program_qms.num}/{report.program_qms.den}")
    # Reduced forms are part of the report; x6's is the whole story.
    if stem == "cube":
        print(f"  reduced x6: {pretty(report.reduced['x6'])}")
    print()

# Reports serialize losslessly; the CLI prints this same document.
p = parse((corpus_dir() / "secmult.mv").read_text())
doc = report_to_json(qms_compute(p, cfg))
print(f"secmult JSON is {len(doc)} bytes; CLI equivalent:")
print()
code = run(["check", str(corpus_dir() / "cube.mv"), "--qms"])
print(f"\nexit code {code} (0 clean, 1 leaky, 2 error, 3 undecided)")
