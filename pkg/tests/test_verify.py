from euclid_mcs.verify import CHECKS, CheckResult, format_table, run_suite


def test_check_table_names_unique():
    names = [c[0] for c in CHECKS]
    assert len(names) == len(set(names))
    assert {c[1] for c in CHECKS} == {"specfun", "sphere", "swsh", "e2", "e3-pj", "e3-jj", "e3-pc", "e3-cc"}


def test_failures_are_recorded(monkeypatch):
    import euclid_mcs.verify as v

    def boom():
        raise RuntimeError("broken")

    monkeypatch.setattr(v, "CHECKS", [("ok", "g", lambda: (True, "fine"), True), ("bad", "g", boom, True)])
    res = run_suite(quick=True)
    assert [r.passed for r in res] == [True, False]
    assert "broken" in res[1].detail
    table = format_table(res)
    assert table.rstrip().endswith("1/2 checks passed")
    assert set(res[0].to_dict()) >= {"name", "group", "passed", "detail", "seconds"}


def test_result_dict():
    r = CheckResult("n", "g", True, "d", 0.5)
    assert r.to_dict()["passed"] is True
