"""Smoke test for the Python bindings. Run after building the extension
with `pip install -e crates/py --no-build-isolation`."""

from pathlib import Path

import prsmc

CORPUS = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "corpus"

E3 = """
brs {
  vars: X, Y, Z, W;
  alphabet: a, b, c;
  rule p1: X -a-> Y.(Z);
  rule p2: Z -b-> eps;
  accepting rule p3: Y -c-> Y || W;
}
"""


def main():
    assert prsmc.normalize("X || eps") == "X"
    assert prsmc.normalize("X.(eps)") == "X"
    assert prsmc.equivalent("X || Y", "Y || X")
    assert not prsmc.equivalent("X.(Y)", "Y.(X)")

    b = prsmc.Brs.parse(E3)
    assert b.is_normal_form()
    assert b.vars == ["W", "X", "Y", "Z"]
    assert len(b.rules) == 3
    assert b.successors("X") == [("p1", "[]", "Y.(Z)")]

    v = b.check("X", 1)
    assert v["verdict"] == "yes", v
    assert v["witness"]["steps"], v
    assert b.check("X", 2)["verdict"] == "no"

    e1 = prsmc.Brs.from_file(str(CORPUS / "e1.brs"))
    assert e1.model_check("X", "GF a")["verdict"] == "holds"
    f = e1.model_check("X", "F b")
    assert f["verdict"] == "fails" and f["counterexample"] is not None

    d = b.decompose()
    assert not d["any_unknown"]
    assert d["rpar"].startswith("brs")

    o = e1.oracle("X", 1, depth=6)
    assert o["verdict"] == "yes"

    text = prsmc.rdha_to_brs((CORPUS / "call.rdha").read_text())
    assert prsmc.parse(text).is_normal_form()
    call = prsmc.Brs.from_file(str(CORPUS / "call.rdha"))
    assert call.check("m0", 2)["verdict"] in ("yes", "no", "unknown")

    for bad in (lambda: prsmc.normalize("X ||"), lambda: b.check("Q", 1), lambda: b.check("X", 4)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
