"""Smoke test for the Python bindings.

Build and install first:  pip install ./crates/py --no-build-isolation
(or `maturin develop -m crates/py/Cargo.toml`), then run this script.
"""

import json
import math
import sys
import tempfile

import anaphora


def main() -> int:
    fig3 = anaphora.Codebook.figure3()
    john_smiles = (0, 0, 0, 0)
    assert fig3.encode("no_elision", john_smiles) == [1, 2, 3, 4, 1, 3, 1, 2, 3, 4, 0]
    assert fig3.encode("pronoun", john_smiles) == [1, 2, 3, 4, 1, 3, 1, 2, 0]
    assert fig3.encode("prodrop", john_smiles) == [1, 2, 3, 4, 1, 3, 0]
    assert anaphora.redundancy(john_smiles) == "fully_redundant"

    cb = anaphora.Codebook(15, 15, mode="overlapping")
    pairs = cb.generate("pronoun")
    assert len(pairs) == 15 ** 4
    meanings = [m for m, _ in pairs]
    signals = [s for _, s in pairs]
    su2 = anaphora.signal_uniqueness(meanings, signals, 2, seed=1)
    assert su2 > 0.1, su2

    receiver = anaphora.Receiver(15, 15, hidden=8)
    receiver.make_uniform()
    pa = receiver.predictive_ambiguity(meanings[:200], signals[:200])
    assert abs(pa[0] - math.log2(15)) < 1e-6 and pa[2] == 0.0

    t = anaphora.two_sample_t([1.0, 2.0, 3.0, 4.0], [2.0, 3.5, 4.0, 6.0])
    assert t["df"] == 6 and 0 < t["p"] < 1
    mean, half = anaphora.ci95([1.0, 2.0, 3.0])
    assert mean == 2.0 and half > 0

    with tempfile.TemporaryDirectory() as out:
        overrides = {
            "n_subjects": 4, "n_verbs": 4, "subsample_size": None, "languages": ["no_elision"],
            "epochs": 2, "seeds": [0], "su_sample_size": 10, "su_resamples": 2, "out_dir": out,
        }
        cfg = anaphora.default_config("supervised", json.dumps(overrides))
        records = json.loads(anaphora.run_experiment(cfg))
        assert records[0]["config_hash"] == anaphora.config_hash(cfg)
        summary = json.loads(anaphora.summarize(out))
        assert summary["supervised"]["languages"][0]["language"] == "no_elision"

    try:
        anaphora.Codebook(15, 15, alphabet_size=3)
    except anaphora.AnaphoraError as e:
        assert "alphabet" in str(e)
    else:
        raise AssertionError("expected AnaphoraError")

    print("python smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
