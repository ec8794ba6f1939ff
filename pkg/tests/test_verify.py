import pytest

from opdyn.errors import ValidityError
from opdyn.verify import (
    check_column_identity,
    check_contraction_bound,
    check_shift_identity,
    run_checks,
)


class TestRunChecks:
    def test_default_runs_everything(self):
        outcomes = run_checks()
        names = [o.name for o in outcomes]
        assert names == [
            "contraction-bound",
            "shift-identity",
            "average-shift",
            "column-identity",
            "mean-preservation",
        ]
        assert all(o.passed for o in outcomes)

    def test_prop_subset(self):
        outcomes = run_checks(props=(2,))
        assert [o.name for o in outcomes] == ["shift-identity"]

    def test_identities_only(self):
        outcomes = run_checks(identities=True)
        assert [o.name for o in outcomes] == ["column-identity", "mean-preservation"]

    def test_unknown_prop_rejected(self):
        with pytest.raises(ValidityError):
            run_checks(props=(4,))


class TestIndividualChecks:
    def test_contraction_detail_mentions_instances(self):
        out = check_contraction_bound(instances=5)
        assert out.passed
        assert "5 instances" in out.detail

    def test_shift_identity_seeded_repeatably(self):
        a = check_shift_identity(instances=5, seed=123)
        b = check_shift_identity(instances=5, seed=123)
        assert a == b

    def test_column_identity_passes(self):
        assert check_column_identity().passed
