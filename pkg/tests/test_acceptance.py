"""Acceptance suite: every criterion at its pinned desk scale and tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion.  The same checks back ``burgerslab check``.
"""

import json

import pytest

from burgerslab.acceptance import CHECKS, run_checks

CRITERIA = [
    (1, "sampler-covariance",
     "exact-sampler covariance within 4 SE entrywise, H in {0.3,0.5,0.7}"),
    (2, "sampler-equivalence",
     "exact vs fast path-max KS below the 1% critical value"),
    (3, "telescoping",
     "slope functional equals its endpoint form to 1e-9 relative"),
    (4, "expectation-identity",
     "mean functional equals twice the mean extremal slope within 4 SE"),
    (5, "inequality-chain",
     "relations (10), (11), (14)-(17) at 4 sigma; max-mean cross-check"),
    (6, "burgers-oracle",
     "sticky clusters match minorant shock clusters within one cell"),
    (7, "dimension",
     "contact-set box dimension within 0.1 of H at N=2^16"),
    (8, "max-exponent",
     "stay-below exponent of the motion within 0.07 of 1-H"),
    (9, "integral-exponent",
     "integrated-motion one-sided exponent within 0.08 of 1/4"),
    (10, "two-sided-bound",
     "two-sided exponent at least (1-H)-0.15; puncture ordering holds"),
    (11, "rkhs",
     "reproducing to 1e-8, composition to 1e-5, shift bound on 5 configs"),
    (12, "determinism",
     "every experiment re-runs bit-identically from its manifest"),
]


def test_registry_covers_all_criteria():
    assert [name for _, name, _ in CRITERIA] == list(CHECKS)


@pytest.mark.parametrize("number,name,blurb", CRITERIA,
                         ids=[f"{n:02d}-{name}" for n, name, _ in CRITERIA])
def test_criterion(number, name, blurb):
    result = run_checks([name])[0]
    verdict = "PASS" if result.passed else "FAIL"
    print(f"criterion {number:2d} {verdict} [{name}] {blurb} "
          f"({result.runtime_s:.1f}s)")
    assert result.passed, json.dumps(result.details, indent=2, default=str)
