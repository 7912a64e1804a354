"""Smoke test for the paragodel extension module.

Run with the built module on the path, e.g. after `pip install ./crates/python`
or with `PYTHONPATH` pointing at a directory holding `paragodel.so`.
"""

from fractions import Fraction
from pathlib import Path

import paragodel

DATA = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"


def main():
    phi = paragodel.Formula("box (p -> q) -> (box p -> box q)")
    assert str(phi) == "box (p -> q) -> (box p -> box q)"
    assert phi.metrics()["modal_count"] == 3
    assert phi.desugar() == phi

    assert paragodel.prove("p -> p", "strong")
    refuted = paragodel.prove(phi, "strong")
    assert not refuted.proved
    pos, neg = refuted.value
    assert pos < 1 or neg > 0
    assert refuted.model.eval(refuted.world, phi) == refuted.value

    assert paragodel.decide_sat("p & ~p", "pos1") is None
    model, world = paragodel.decide_sat("dia p", "strong")
    assert model.eval(world, paragodel.Formula("dia p"))[0] == 1

    found = paragodel.search_countermodel("box 1", "strong", max_worlds=2, grid=2)
    assert found is not None
    assert paragodel.search_countermodel("p -> p", "strong") is None

    nab = paragodel.translate("box p -> p", "nabla")
    assert nab.metrics()["size"] == 12

    m = paragodel.Model.from_json((DATA / "sources.json").read_text())
    value = m.eval(m.worlds[0], paragodel.Formula("p"))
    assert all(isinstance(x, Fraction) for x in value)
    assert set(m.frame_predicates()) == {"crisp_plus", "crisp_minus", "mono_relational"}
    assert paragodel.Model.from_json(m.to_json()).to_json() == m.to_json()

    try:
        paragodel.Formula("p &")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
