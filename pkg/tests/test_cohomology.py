import pytest

from llg.builtins import builtin, sl2_constants
from llg.cohomology import (
    CohomologyError,
    CoefficientModule,
    ce_matrices,
    group_constants,
    localized_complex,
    markdown_table,
)
from llg.linalg import check_complex

# known Lie algebra cohomology; the horizontal route has to reproduce these
REFERENCE = [
    ("abelian:2", "trivial", [1, 2, 1]),
    ("abelian:2", "coadjoint", [2, 4, 2]),
    ("heisenberg3", "trivial", [1, 2, 2, 1]),
    ("heisenberg3", "adjoint", [1, 4, 5, 2]),
    ("heisenberg3", "coadjoint", [2, 5, 4, 1]),
    ("affine2", "trivial", [1, 1, 0]),
    ("affine2", "adjoint", [0, 0, 0]),
    ("uppertriangular3", "trivial", [1, 2, 1, 0]),
]


@pytest.mark.parametrize("name,label,dims", REFERENCE)
def test_horizontal_route_reference_values(name, label, dims):
    G = builtin(name)
    h, o = localized_complex(G, None, "ilhc", CoefficientModule.parse(label))
    assert h.betti() == dims
    assert o.betti() == dims


@pytest.mark.parametrize("label", ["trivial", "adjoint", "coadjoint", "tensor:1,1", "power:2", "power:3"])
@pytest.mark.parametrize("name", ["abelian:2", "heisenberg3", "affine2"])
def test_ilhc_matches_ce(name, label):
    G = builtin(name)
    h, o = localized_complex(G, None, "ilhc", CoefficientModule.parse(label))
    check_complex(h.differentials)
    assert h.dims == o.dims
    assert h.betti() == o.betti()


@pytest.mark.parametrize("name", ["heisenberg3", "affine2", "uppertriangular3"])
def test_other_two_route_families(name):
    G = builtin(name)
    for complex_name, label in [("hat35", "trivial"), ("hat35", "coadjoint"), ("biinv36", "trivial"),
                                ("ilhdc-row", "power:2"), ("m1-hat", "trivial")]:
        h, o = localized_complex(G, None, complex_name, CoefficientModule.parse(label))
        assert h.betti() == o.betti(), (complex_name, label)


def test_hat35_coadjoint_is_three_copies_of_trivial():
    G = builtin("heisenberg3")
    h, _ = localized_complex(G, None, "hat35", CoefficientModule.parse("coadjoint"))
    assert h.betti() == [3, 6, 6, 3]


def test_biinvariant_subcomplex_heisenberg():
    h, o = localized_complex(builtin("heisenberg3"), None, "biinv36", CoefficientModule.parse("trivial"))
    assert h.betti() == o.betti() == [1, 2, 1, 1]


def test_sl2():
    c = sl2_constants()
    assert localized_complex(None, c, "ce", CoefficientModule.parse("trivial"))[0].betti() == [1, 0, 0, 1]
    for label in ("adjoint", "coadjoint"):
        assert localized_complex(None, c, "ce", CoefficientModule.parse(label))[0].betti() == [0, 0, 0, 0]


@pytest.mark.parametrize("label", ["trivial", "adjoint", "coadjoint", "tensor:2,1", "power:3"])
@pytest.mark.parametrize("name", ["heisenberg3", "affine2", "uppertriangular3"])
def test_coefficient_modules_are_representations(name, label):
    c = group_constants(builtin(name))
    V = CoefficientModule.parse(label)
    assert V.check_representation(c)
    check_complex(ce_matrices(c, V).differentials)


def test_power_module_shape():
    V = CoefficientModule.parse("power:3")
    assert (V.upper, V.lower, V.dim(2)) == (0, 2, 4)


@pytest.mark.parametrize("bad", ["tensor:1", "tensor:-1,0", "power:0", "power:x", "spin"])
def test_bad_coefficient_labels(bad):
    with pytest.raises(CohomologyError):
        CoefficientModule.parse(bad)


def test_group_complex_needs_group_and_power_row_needs_power():
    with pytest.raises(CohomologyError):
        localized_complex(None, sl2_constants(), "ilhc", CoefficientModule.parse("trivial"))
    with pytest.raises(CohomologyError):
        localized_complex(builtin("affine2"), None, "ilhdc-row", CoefficientModule.parse("trivial"))


def test_json_and_markdown():
    h, _ = localized_complex(builtin("affine2"), None, "ilhc", CoefficientModule.parse("trivial"))
    d = h.to_json(matrices=True)
    assert d["dims"] == [1, 1, 0] and d["cochain_dims"] == [1, 2, 1]
    assert d["differentials"][1] == [["0/1", "-1/1"]]
    table = markdown_table([{"complex": "ilhc", "coefficients": "trivial", "route": "horizontal", "dims": [1, 1, 0]}])
    assert "| ilhc | trivial | horizontal | 1 | 1 | 0 |" in table


def test_max_degree_keeps_the_outgoing_differential():
    # H^2 of sl2 with coadjoint coefficients vanishes; cutting the complex at degree 2 must not turn it into C^2/B^2
    h, _ = localized_complex(None, sl2_constants(), "ce", CoefficientModule.parse("coadjoint"), max_k=2)
    assert h.betti() == [0, 0, 0]
    h, o = localized_complex(builtin("heisenberg3"), None, "ilhc", CoefficientModule.parse("trivial"), max_k=1)
    assert h.betti() == o.betti() == [1, 2]
