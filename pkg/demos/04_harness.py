"""Running a registered experiment from a config file and summarizing it.

Equivalent shell session::

    levylil run lil.yaml --out runs/lil
    levylil report runs
    levylil replay runs/lil/path0.lilp --config runs/lil/config.yaml
"""
import tempfile
from pathlib import Path

from levylil import StableLevy
from levylil.harness import ExperimentConfig, report
from levylil.harness.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cfg = ExperimentConfig("lil-paths", StableLevy(1.5), n_paths=200, master_seed=1,
                           ladder={"t0": 16, "n_levels": 10})
    cfg.save(tmp / "lil.yaml")
    print((tmp / "lil.yaml").read_text())
    main(["run", str(tmp / "lil.yaml"), "--out", str(tmp / "runs" / "lil")])
    print(report(tmp / "runs"))
    main(["replay", str(tmp / "runs" / "lil" / "path0.lilp"),
          "--config", str(tmp / "runs" / "lil" / "config.yaml")])
