import math

import numpy as np
import pytest

from rotwave import verify
from rotwave.verify import Check


def test_check_relations():
    assert Check("s", "a", 0.5, 1.0).passed
    assert not Check("s", "a", 1.0, 1.0).passed
    assert Check("s", "a", 1.0, 1.0, "<=").passed
    assert Check("s", "a", 2.0, 1.0, ">=").passed
    assert not Check("s", "a", math.nan, 1.0).passed
    assert not Check("s", "a", math.inf, math.inf, "<=").passed
    with pytest.raises(ValueError):
        Check("s", "a", 1.0, 1.0, "==").passed


def test_check_row():
    assert Check("bands", "x", 0.25, 0.5).row() == ["bands", "x", "0.25", "<", "0.5", "pass"]


def test_expand_suites():
    assert verify.expand_suites("all") == list(verify.SUITES)
    assert verify.expand_suites("bands, formulation,bands") == ["bands", "formulation"]
    for bad in ("", "nope", "bands,nope"):
        with pytest.raises(ValueError):
            verify.expand_suites(bad)


def test_bands_suite_passes_and_is_deterministic():
    a = verify.run_suite("bands", np.random.default_rng(1))
    b = verify.run_suite("bands", np.random.default_rng(1))
    assert a == b
    assert all(c.passed for c in a)


def test_write_outputs(tmp_path):
    checks = [Check("bands", "x", 0.25, 0.5)]
    verify.write_outputs(tmp_path, "bands", checks)
    assert (tmp_path / "verify-bands.csv").read_text() == "suite,check,value,relation,limit,status\nbands,x,0.25,<,0.5,pass\n"
    assert not (tmp_path / "verify-bands-derivatives.csv").exists()


def test_unknown_suite():
    with pytest.raises(ValueError):
        verify.run_suite("nope", np.random.default_rng(0))
