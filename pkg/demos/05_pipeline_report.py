"""
Running the whole pipeline
==========================

The same steps as the command-line tool: a declarative config in, a
JSON report and tab-separated plot data out.
"""

import json
import tempfile
from pathlib import Path

from koethelab.pipeline import DEMO_CONFIG, PipelineConfig, dumps_report, emit_plot_data, run_pipeline

cfg = PipelineConfig.from_dict(DEMO_CONFIG)
report = run_pipeline(cfg, "full")
doc = json.loads(dumps_report(report))
print("overall passed:", doc["passed"], " config sha256:", doc["config_sha256"][:12])
print("lambda:", doc["basis"]["lambda"])
print("C_hat by N':", [t["C_estimate"]["C_hat"] for t in doc["cone"][0]["truncations"]])

with tempfile.TemporaryDirectory() as tmp:
    for path in emit_plot_data(report, tmp):
        print(f"\n# {Path(path).name}")
        print(Path(path).read_text().rstrip())

# the text form lists every check
print(dumps_report(report, "text").splitlines()[-1])
