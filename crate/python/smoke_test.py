"""Quick check that the pytabscan extension loads and runs end to end."""

import json
import tempfile
from pathlib import Path

import pytabscan


def main():
    a = pytabscan.Region(0, 0, 10, 10)
    b = pytabscan.Region(5, 5, 20, 20)
    c = pytabscan.Region(40, 40, 50, 50)
    merged = pytabscan.ensemble_union([a], [b, c])
    assert merged == [pytabscan.Region(0, 0, 20, 20), c], merged
    p, r, f1 = pytabscan.area_scores([a], [a])
    assert (p, r, f1) == (1.0, 1.0, 1.0)

    cfg = pytabscan.Config(ocr_cmd="stub:", threshold_start=0.6)
    assert pytabscan.Config.from_string(cfg.to_config_string()).to_config_string() == cfg.to_config_string()
    try:
        pytabscan.Config(delta=0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range delta accepted")

    with tempfile.TemporaryDirectory() as tmp:
        corpus = Path(tmp) / "corpus"
        images = pytabscan.synth(str(corpus), seed=3, count=3, span=False)
        assert len(images) == 3
        tables = pytabscan.extract(images[0], cfg)
        assert len(tables) == 1, tables
        t = tables[0]
        assert len(t.cells) == t.rows and all(len(row) == t.cols for row in t.cells)
        print(t, t.csv.splitlines()[0])

        out = Path(tmp) / "out"
        run_cfg = pytabscan.Config(ocr_cmd="stub:", out_dir=str(out))
        results = pytabscan.extract_files([str(corpus)], run_cfg)
        assert all(err is None for _, _, err in results), results
        report = pytabscan.evaluate(str(out), str(corpus))
        print(json.dumps(report["average"]))
        assert report["average"]["f1"] > 0.9
    print("smoke test ok")


if __name__ == "__main__":
    main()
