import json

import pytest
from hypothesis import given, strategies as st

from beamzone.model import (BeamSystem, LoadArrangement, LoadCombination, Material,
                            SectionCatalog, SteelSection, ValidationError, factored_udl,
                            validate_system)


@pytest.fixture(scope="module")
def catalog():
    return SectionCatalog.default()


def five_span():
    return BeamSystem([6.0, 5.0, 7.0, 5.5, 6.0], [3.0] * 5, [20.0, 25.0, 30.0, 20.0, 35.0])


def test_valid_system_has_no_violations(catalog):
    assert validate_system(five_span(), catalog) == []


def test_negative_span_names_member():
    s = BeamSystem([6.0, -1.0], [3.0, 3.0], [0.0, 0.0])
    v = validate_system(s)
    assert len(v) == 1 and "member 1" in v[0]


def test_length_mismatch():
    s = BeamSystem([6.0] * 5, [3.0] * 4, [1.0] * 5)
    v = validate_system(s)
    assert any("permanent_udl" in x and "4" in x for x in v)


def test_negative_udl_rejected():
    s = BeamSystem([6.0], [3.0], [-5.0])
    assert validate_system(s)


def test_unknown_section(catalog):
    odd = SteelSection("XX 1", 0.3, 40.0, 1e-4, 1e-3, 2e-3, 5e-3)
    s = BeamSystem([6.0], [3.0], [5.0], (odd,))
    assert any("not in catalog" in x for x in validate_system(s, catalog))


def test_factored_udl_examples():
    s = BeamSystem([6.0], [3.0], [20.0])
    combo = LoadCombination(1.35, 1.5)
    assert factored_udl(s, 0, [1], combo, 0.6) == pytest.approx(34.86, abs=1e-12)
    assert factored_udl(s, 0, [0], combo, 0.6) == pytest.approx(1.35 * 3.6, abs=1e-12)
    unit = BeamSystem([1.0], [0.0], [1.0])
    assert factored_udl(unit, 0, LoadArrangement((1,)), LoadCombination(1.0, 1.0), 0.0) == 1.0


def test_factored_udl_index_error():
    with pytest.raises(IndexError):
        factored_udl(five_span(), 5, [1] * 5, LoadCombination(), 0.0)


@given(g=st.floats(0, 100), q=st.floats(0, 100), sw=st.floats(0, 10),
       dg=st.floats(0, 10), dq=st.floats(0, 10), dsw=st.floats(0, 10))
def test_factored_udl_monotone(g, q, sw, dg, dq, dsw):
    combo = LoadCombination()
    base = BeamSystem([5.0], [g], [q])
    more = BeamSystem([5.0], [g + dg], [q + dq])
    for act in (0, 1):
        assert factored_udl(base, 0, [act], combo, sw) <= factored_udl(more, 0, [act], combo, sw + dsw) + 1e-9
    assert factored_udl(base, 0, [0], combo, sw) <= factored_udl(base, 0, [1], combo, sw)


def test_material_default_ratio():
    mat = Material.s355()
    assert mat.modulus_ratio == pytest.approx(2.6)
    assert mat.yield_strength == 355e6
    with pytest.raises(ValidationError):
        Material(210e9, 210e9, 355e6)


def test_arrangement_entries():
    with pytest.raises(ValidationError):
        LoadArrangement((0, 2))
    assert LoadArrangement.from_bits("0110").complement().bits == "1001"


def test_catalog_sorted_and_unique(catalog):
    keys = [s.ordering_key for s in catalog]
    assert all(a < b for a, b in zip(keys, keys[1:]))
    assert len({s.designation for s in catalog}) == len(catalog)
    assert all(s.shear_area_major < s.cross_area for s in catalog)


def test_catalog_max_ratio(catalog):
    # governed by the 914x419x388 with A_z taken as the clear web area
    assert catalog.max_shear_ratio == pytest.approx(0.397, abs=5e-4)


def test_catalog_unit_conversion(catalog):
    s = catalog.get("UKB 457x191x67")
    assert s.depth == pytest.approx(0.4534)
    assert s.second_moment_major == pytest.approx(29400e-8)
    assert s.plastic_modulus_major == pytest.approx(1470e-6)
    assert s.self_weight == pytest.approx(67 * 9.81 / 1000)


def test_catalog_rejects_duplicates(tmp_path):
    p = tmp_path / "cat.csv"
    p.write_text("designation,mass_kg_m,depth_mm,Iyy_cm4,Wply_cm3,Avz_cm2,A_cm2\n"
                 "A,10,100,100,20,5,12\nA,12,120,150,25,6,14\n")
    with pytest.raises(ValidationError, match="duplicate"):
        SectionCatalog.from_csv(p)


def test_system_json_roundtrip(tmp_path, catalog):
    s = five_span().with_sections([catalog[10]] * 5)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(s.to_json()))
    back = BeamSystem.load(p, catalog)
    assert back == s


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{spans: [1,")
    with pytest.raises(ValidationError, match="malformed"):
        BeamSystem.load(p)
