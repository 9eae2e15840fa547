from nlsecap import validation


def test_quick_suite_passes():
    res = validation.run(quick=True)
    assert len(res) == len(validation.QUICK)
    assert all(r.ok for r in res), [r for r in res if not r.ok]


def test_full_suite_passes():
    res = validation.run(quick=False)
    assert [r.name for r in res] == [n for n, _ in validation.FULL]
    assert all(r.ok for r in res), [r for r in res if not r.ok]


def test_failing_check_is_reported_not_raised(monkeypatch):
    def boom():
        raise RuntimeError("broken")

    monkeypatch.setattr(validation, "QUICK", [("boom", boom)])
    (r,) = validation.run(quick=True)
    assert not r.ok and "RuntimeError" in r.detail
