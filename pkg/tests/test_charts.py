import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from ktr.charts import (
    Chart,
    ChartClass,
    ChartDifferential,
    ChartError,
    HiddenExtension,
    assemble,
    audit_against_tr,
    bundled_charts,
    chart_to_dict,
    degree_order,
    dumps,
    is_conjectural,
    load_chart,
    loads,
    run_to_final,
    save_chart,
    tr_counterpart,
    tr_expected_order,
    truncate,
    validate,
)

BUNDLED = [
    "c4-mod4-lambda4-deg11",
    "c4-integral-lambda4-deg9-10",
    "c4-integral-lambda4-deg13",
    "c2-integral-lambda4-deg9",
]


def total_exp(chart):
    return sum(c.order_exp for c in chart.classes)


def orders(chart):
    return {c.name: c.order_exp for c in chart.classes}


@st.composite
def valid_charts(draw):
    """Random runnable integral C_4 charts: each source feeds 1 or 2 differentials."""
    classes, diffs = [], []
    for k in range(draw(st.integers(0, 6))):
        f = draw(st.integers(-20, 20))
        deg = 2 * draw(st.integers(-5, 10))
        src = ChartClass(f"s{k}", f, deg, 2)
        classes.append(src)
        pages = sorted(draw(st.lists(st.integers(2, 30), min_size=0, max_size=2, unique=True)))
        for j, page in enumerate(pages):
            image = 1 if len(pages) == 2 else draw(st.integers(1, 2))
            tgt = ChartClass(f"s{k}t{j}", f - page, deg - 1, draw(st.integers(image, 2)))
            classes.append(tgt)
            diffs.append(ChartDifferential(page, src.name, tgt.name, image, source_mult_exp=j))
    for k in range(draw(st.integers(0, 4))):
        classes.append(ChartClass(f"free{k}", draw(st.integers(-20, 20)), draw(st.integers(-5, 20)), draw(st.integers(1, 2))))
    return Chart(name="random", p=2, subgroup_exp=2, lambda_shift=4,
                 classes=tuple(classes), differentials=tuple(diffs))


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_charts_load_cleanly(name):
    chart = load_chart(name)
    assert validate(chart) == []
    assert chart.partial


def test_bundled_list():
    assert set(BUNDLED) <= set(bundled_charts())


@pytest.mark.parametrize("name", BUNDLED)
def test_round_trip(name, tmp_path):
    chart = load_chart(name)
    path = tmp_path / "c.json"
    save_chart(chart, path)
    again = load_chart(path)
    assert again == chart
    assert dumps(again) == dumps(chart)
    for derived in (run_to_final(chart), truncate(chart), run_to_final(truncate(chart))):
        assert loads(dumps(derived)) == derived


def test_bidegree_rule_rejected():
    doc = chart_to_dict(load_chart("c2-integral-lambda4-deg9"))
    doc["classes"][2]["degree"] = 8  # t^-3 la1, target of d_4
    with pytest.raises(ChartError, match="target degree"):
        load_chart(doc)


def test_filtration_rule_rejected():
    doc = chart_to_dict(load_chart("c2-integral-lambda4-deg9"))
    doc["differentials"][0]["page"] = 5
    with pytest.raises(ChartError, match="filtration"):
        load_chart(doc)


def test_odd_source_rejected_for_integral_chart():
    chart = Chart("odd", 2, 2, 4, classes=(
        ChartClass("a", 10, 11, 1), ChartClass("b", 6, 10, 1),
    ), differentials=(ChartDifferential(4, "a", "b"),))
    assert any("even to odd" in p for p in validate(chart))
    # the same shape is fine with mod 4 coefficients
    assert validate(Chart("odd", 2, 2, 4, classes=chart.classes,
                          differentials=chart.differentials, coefficients=2)) == []


def test_other_load_errors(tmp_path):
    with pytest.raises(ChartError, match="parse error"):
        loads("{not json", where="x.json")
    with pytest.raises(ChartError, match="unknown source"):
        load_chart({"prime": 2, "subgroup_exp": 2, "classes": [],
                    "differentials": [{"page": 2, "source": "a", "target": "b"}]})
    with pytest.raises(ChartError, match="divide"):
        load_chart({"prime": 2, "subgroup_exp": 1, "classes": [
            {"name": "a", "filtration": 0, "degree": 0, "order_exp": 2}]})
    with pytest.raises(ChartError, match="duplicate"):
        load_chart({"prime": 2, "subgroup_exp": 2, "classes": [
            {"name": "a", "filtration": 0, "degree": 0, "order_exp": 1},
            {"name": "a", "filtration": 1, "degree": 0, "order_exp": 1}]})
    with pytest.raises(FileNotFoundError):
        load_chart(tmp_path / "missing.json")


def test_no_differentials_is_identity():
    chart = Chart("flat", 3, 1, 0, classes=(ChartClass("a", 0, 3, 1), ChartClass("b", 2, 3, 1)))
    final = run_to_final(chart)
    assert final.classes == chart.classes
    assert truncate(chart, math.inf) is chart
    assert degree_order(final, 3) == 9
    assert degree_order(final, 7) == 1
    assert str(assemble(final, 3)) == "Z/3 ⊕ Z/3"


def test_overlarge_image_rejected():
    chart = Chart("bad", 2, 2, 0, classes=(
        ChartClass("s", 10, 10, 2), ChartClass("a", 6, 9, 1), ChartClass("b", 2, 9, 1),
    ), differentials=(
        ChartDifferential(4, "s", "a", 1),
        ChartDifferential(8, "s", "b", 1, source_mult_exp=0),
    ))
    with pytest.raises(ChartError, match="generated by"):
        run_to_final(chart)


def test_degree9_tate_survivors():
    final = run_to_final(load_chart("c4-integral-lambda4-deg9-10"))
    assert [c.name for c in final.classes] == ["t^-1 la1 mu1", "t^3 la1 mu1^3", "t^7 la1 mu1^5"]
    assert degree_order(final, 9) == 8
    assert str(assemble(final, 9)) == "Z/8"
    assert is_conjectural(final, 9)


def test_degree9_truncated():
    final = run_to_final(truncate(load_chart("c4-integral-lambda4-deg9-10"), 8))
    survivors = [c.name for c in final.in_degree(9)]
    assert survivors == ["t^-3 la1", "t^-1 la1 mu1", "t^3 la1 mu1^3", "t^7 la1 mu1^5", "t^11 la1 mu1^7"]
    assert degree_order(final, 9) == 2**5
    assert str(assemble(final, 9)) == "Z/2 ⊕ Z/16"


def test_degree13():
    chart = load_chart("c4-integral-lambda4-deg13")
    tate = run_to_final(chart)
    assert [c.name for c in tate.in_degree(13)] == ["t^-3 la1 mu1", "t la1 mu1^3"]
    assert str(assemble(tate, 13)) == "Z/4"
    trunc = run_to_final(truncate(chart))
    assert degree_order(trunc, 13) == 16
    assert "t^5 la1 mu1^5" in orders(trunc)
    assert str(assemble(trunc, 13)) == "Z/2 ⊕ Z/8"
    assert is_conjectural(trunc, 13)


def test_mod4_degree11():
    chart = load_chart("c4-mod4-lambda4-deg11")
    tate = run_to_final(chart)
    assert degree_order(tate, 11) == 4
    assert degree_order(tate, 12) == 2  # 2 t^-6 is a permanent cycle
    trunc = run_to_final(truncate(chart, 8))
    assert degree_order(trunc, 11) == 8
    assert not is_conjectural(trunc, 11)
    # Z/2 + Z/32 reduced mod 4
    assert str(assemble(trunc, 11)) == "Z/2 ⊕ Z/4"


def test_truncation_default_bound():
    chart = load_chart("c4-integral-lambda4-deg9-10")
    assert chart.default_bound == 8
    assert truncate(chart) == truncate(chart, 8)


def test_degree_order_needs_final_page():
    with pytest.raises(ValueError):
        degree_order(load_chart("c4-mod4-lambda4-deg11"), 11)


def test_extension_errors():
    classes = (ChartClass("a", 0, 5, 1), ChartClass("b", -4, 5, 1), ChartClass("c", -8, 6, 1))
    cyc = Chart("cyc", 2, 1, 0, classes=classes[:2], extensions=(
        HiddenExtension("a", "b"), HiddenExtension("b", "a")))
    assert any("cycle" in p for p in validate(cyc))
    with pytest.raises(ChartError, match="cycle"):
        assemble(replace(cyc, final=True), 5)
    cross = Chart("cross", 2, 1, 0, classes=classes, extensions=(HiddenExtension("a", "c"),))
    assert any("links degrees" in p for p in validate(cross))


def test_audits():
    mod4 = load_chart("c4-mod4-lambda4-deg11")
    report = audit_against_tr(truncate(mod4, 8), 11, 8)
    assert report.match and not report.conjectural and report.truncated_at == 8
    assert audit_against_tr(mod4, 11, 4).match
    deg9 = truncate(load_chart("c4-integral-lambda4-deg9-10"), 8)
    report = audit_against_tr(deg9, 9, 2**5)
    assert report.match and report.conjectural and report.group == "Z/2 ⊕ Z/16"
    deg13 = truncate(load_chart("c4-integral-lambda4-deg13"), 8)
    assert audit_against_tr(deg13, 13, 2**4).match
    assert not audit_against_tr(deg13, 13, 2**5).match


def test_tr_counterparts():
    deg9 = load_chart("c4-integral-lambda4-deg9-10")
    assert tr_counterpart(deg9, 9) == (2, 2, 1)
    assert tr_expected_order(deg9, 9) == 8
    assert tr_counterpart(truncate(deg9), 9) == (3, 4, 1)
    assert tr_expected_order(truncate(deg9), 9) == 32
    deg13 = load_chart("c4-integral-lambda4-deg13")
    assert tr_expected_order(deg13, 13) == 4
    assert tr_expected_order(truncate(deg13), 13) == 16
    assert tr_counterpart(deg9, 10) is None
    assert tr_counterpart(truncate(load_chart("c2-integral-lambda4-deg9")), 9) is None


@settings(max_examples=200, deadline=None)
@given(valid_charts())
def test_order_conservation(chart):
    assert validate(chart) == []
    final = run_to_final(chart)
    killed = sum(2 * d.image_exp for d in chart.differentials)
    assert total_exp(final) + killed == total_exp(chart)
    assert all(c.order_exp >= 1 for c in final.classes)


@settings(max_examples=200, deadline=None)
@given(valid_charts(), st.integers(-20, 20))
def test_truncate_commutes_with_run(chart, bound):
    a = truncate(run_to_final(chart), bound)
    b = run_to_final(truncate(chart, bound))
    assert orders(a) == orders(b)
    assert all(c.filtration <= bound for c in a.classes)


@pytest.mark.parametrize("name", BUNDLED)
def test_truncate_commutes_on_bundled(name):
    chart = load_chart(name)
    for bound in range(-25, 16):
        assert orders(truncate(run_to_final(chart), bound)) == orders(run_to_final(truncate(chart, bound)))


@settings(max_examples=100, deadline=None)
@given(valid_charts())
def test_extensions_never_change_order(chart):
    final = run_to_final(chart)
    for n in {c.degree for c in final.classes}:
        names = [c.name for c in final.in_degree(n)]
        exts = tuple(HiddenExtension(a, b) for a, b in zip(names, names[1:]))
        linked = replace(final, extensions=exts)
        group = assemble(linked, n)
        assert group.order == degree_order(final, n)
        assert group.summands == min(1, len(names))
