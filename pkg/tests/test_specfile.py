import copy
import json

import numpy as np
import pytest

from algc.errors import ParseError, SchemaError
from algc.specfile import AlgebroidSpec, build, dump, dumps, load

BASE = {
    "name": "toy",
    "base_dim": 1,
    "rank": 2,
    "coords": ["t"],
    "domain": {"lower": [0.0], "upper": [1.0]},
    "anchor": [["1", "0"]],
    "structure": [{"k": 1, "i": 0, "j": 1, "expr": "t"}],
}


def spec(**changes):
    doc = copy.deepcopy(BASE)
    doc.update(changes)
    return doc


class TestRoundTrip:
    def test_bundled(self, bundled, tmp_path):
        for name, path in bundled.items():
            s = load(path)
            out = tmp_path / f"{name}.json"
            dump(s, out)
            again = load(out)
            assert again == s
            assert dumps(again) == dumps(s)

    def test_toy(self):
        s = AlgebroidSpec.from_dict(spec())
        assert AlgebroidSpec.from_dict(json.loads(dumps(s))) == s


class TestSparseStructure:
    def test_skew_completion(self):
        s = AlgebroidSpec.from_dict(spec())
        assert s.structure[1][0][1] == "t" and s.structure[1][1][0] == "-(t)"

    def test_reversed_entry(self):
        s = AlgebroidSpec.from_dict(spec(structure=[{"k": 1, "i": 1, "j": 0, "expr": "t"}]))
        alg = build(s).alg
        c = alg.structure(np.array([0.5]))
        assert c[1, 0, 1] == pytest.approx(-0.5) and c[1, 1, 0] == pytest.approx(0.5)

    def test_consistent_duplicate_is_accepted(self):
        entry = {"k": 1, "i": 0, "j": 1, "expr": "t"}
        AlgebroidSpec.from_dict(spec(structure=[entry, entry]))

    @pytest.mark.parametrize("entries", [
        [{"k": 1, "i": 0, "j": 1, "expr": "t"}, {"k": 1, "i": 0, "j": 1, "expr": "2*t"}],
        [{"k": 1, "i": 0, "j": 1, "expr": "t"}, {"k": 1, "i": 1, "j": 0, "expr": "t"}],
        [{"k": 0, "i": 1, "j": 1, "expr": "t"}],
        [{"k": 2, "i": 0, "j": 1, "expr": "t"}],
    ])
    def test_rejected(self, entries):
        with pytest.raises(SchemaError):
            AlgebroidSpec.from_dict(spec(structure=entries))

    def test_three_form_completion(self, so3):
        H = so3.H(np.zeros(3))
        assert H[0, 1, 2] == 1 and H[2, 1, 0] == -1 and H[1, 2, 0] == 1


class TestSchema:
    @pytest.mark.parametrize("changes", [
        {"rank": 9},
        {"coords": ["t", "s"]},
        {"coords": ["sin"]},
        {"domain": {"lower": [1.0], "upper": [0.0]}},
        {"anchor": [["1"]]},
        {"anchor": [["1", 0]]},
        {"metric": [["1", "0"]]},
        {"unexpected": 1},
        {"derive": "other"},
    ])
    def test_violations(self, changes):
        with pytest.raises(SchemaError):
            AlgebroidSpec.from_dict(spec(**changes))

    def test_missing_field(self):
        doc = spec()
        del doc["anchor"]
        with pytest.raises(SchemaError, match="anchor"):
            AlgebroidSpec.from_dict(doc)

    def test_parse_error_propagates(self):
        with pytest.raises(ParseError):
            AlgebroidSpec.from_dict(spec(anchor=[["1", "t+*t"]]))

    def test_malformed_fixture(self, data_dir):
        with pytest.raises(ParseError, match="byte 2"):
            load(data_dir / "malformed.json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError):
            load(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{", encoding="utf-8")
        with pytest.raises(SchemaError):
            load(bad)

    def test_derive_needs_j(self):
        with pytest.raises(SchemaError):
            build(AlgebroidSpec.from_dict(spec(derive="tmj")))


class TestBuild:
    def test_sections_and_frame(self, euclid2):
        p = np.array([0.2, 0.3])
        np.testing.assert_allclose(euclid2.section("X")(p), [0.3, 0.0])
        np.testing.assert_allclose(euclid2.section("e2")(p), [0.0, 1.0])
        with pytest.raises(SchemaError):
            euclid2.section("e3")

    def test_stored_tmj_matches_constructed(self, registry, bundled):
        from algc.specfile import load_fixture
        stored = load_fixture(bundled["tmj_twisted_j"]).alg
        built = registry["tmj_twisted_j"].alg
        p = np.array([0.1, 0.2, 0.3, -0.4])
        np.testing.assert_allclose(stored.structure(p), built.structure(p), atol=1e-13)
        np.testing.assert_allclose(stored.anchor(p), built.anchor(p), atol=1e-13)
