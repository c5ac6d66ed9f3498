"""Tests for the closed-form FLOPS estimates."""

import csv
import dataclasses
import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from twoway_coding.flops import (
    FLOPS_FIELDS,
    REFERENCE_PROFILE,
    DimProfile,
    estimate,
    report,
    write_csv,
)
from twoway_coding.models import ModelKind

UNIT = DimProfile(K=1, M=1, T=1, h_c=1, h_b=1, h_r=1, encoder_layers=1, decoder_layers=1)


def test_unit_dimensions():
    """Test the constants on all-one dimensions."""
    assert estimate("TWLC", UNIT).total == 312
    assert estimate("TWBAF", UNIT).total == 232
    assert estimate("TWRNN", UNIT).total == 104


def test_reference_operating_point():
    """Test the totals at K=6, M=3, T=18 with the default hidden sizes."""
    twlc = estimate("TWLC", REFERENCE_PROFILE)
    twbaf = estimate("TWBAF", REFERENCE_PROFILE)
    twrnn = estimate("TWRNN", REFERENCE_PROFILE)
    assert twlc.total == 585_728
    assert twbaf.total == 2_302_976
    assert twrnn.total == 2_231_600
    assert twlc.total < twrnn.total < twbaf.total


def test_reference_totals_within_factor_two_of_target_scale():
    """Test that the calibrated totals sit near 0.6M, 2.5M and 2.6M."""
    for kind, target in (("TWLC", 0.6e6), ("TWBAF", 2.5e6), ("TWRNN", 2.6e6)):
        total = estimate(kind, REFERENCE_PROFILE).total
        assert target / 2 <= total <= target * 2


def test_total_covers_both_users():
    """Test total = 2 * (encode + decode) and that terms add up."""
    result = estimate("TWBAF", REFERENCE_PROFILE)
    assert result.total == 2 * (result.encode + result.decode)
    assert sum(result.terms.values()) == result.encode + result.decode


def test_quadratic_terms_scale_with_hidden_width():
    """Test that doubling h quadruples the hidden-to-hidden terms."""
    narrow = estimate("TWLC", DimProfile(K=6, M=3, T=18, h_c=16))
    wide = estimate("TWLC", DimProfile(K=6, M=3, T=18, h_c=32))
    assert wide.terms["encode_hidden"] == 4 * narrow.terms["encode_hidden"]
    assert wide.terms["encode_mixing"] == 2 * narrow.terms["encode_mixing"]


# Dimensions each kind's cost depends on; the rest leave it unchanged.
USED_DIMS = {
    "TWLC": {"T", "M", "h_c"},
    "TWBAF": {"T", "h_b", "encoder_layers", "decoder_layers"},
    "TWRNN": {"T", "M", "h_r"},
}

SWEEPS = {
    "T": (DimProfile(K=6, M=3, T=12), [12, 18, 24, 30, 36]),
    "M": (DimProfile(K=12, M=1, T=24), [1, 2, 3, 4, 6, 12]),
    "h_c": (REFERENCE_PROFILE, [4, 8, 16, 32, 64]),
    "h_b": (REFERENCE_PROFILE, [4, 8, 16, 32, 64]),
    "h_r": (REFERENCE_PROFILE, [5, 10, 25, 50, 100]),
    "encoder_layers": (REFERENCE_PROFILE, [1, 2, 3, 4]),
    "decoder_layers": (REFERENCE_PROFILE, [1, 2, 3, 4]),
}


@pytest.mark.parametrize("kind", ["TWLC", "TWBAF", "TWRNN"])
@pytest.mark.parametrize("dim", list(SWEEPS))
def test_estimates_are_monotone_in_each_dimension(kind, dim):
    """Test that totals never fall as one dimension grows at fixed K."""
    if dim == "M" and kind == "TWBAF":
        pytest.skip("TWBAF attention shrinks with the token count K/M")
    base, values = SWEEPS[dim]
    totals = [estimate(kind, dataclasses.replace(base, **{dim: v})).total for v in values]
    if dim in USED_DIMS[kind]:
        assert all(a < b for a, b in zip(totals, totals[1:])), totals
    else:
        assert len(set(totals)) == 1


def test_twbaf_is_not_monotone_in_sub_block_length():
    """Test that fewer, longer TWBAF tokens can cost less."""
    totals = [estimate("TWBAF", DimProfile(K=12, M=m, T=24)).total for m in (1, 2, 3, 4, 6, 12)]
    assert totals[1] < totals[0]


def test_twlc_cost_falls_with_message_length_at_fixed_block():
    """Test that TWLC at fixed T and M gets cheaper as K grows, since each sub-block has fewer uses."""
    short = estimate("TWLC", DimProfile(K=3, M=3, T=18))
    long = estimate("TWLC", DimProfile(K=6, M=3, T=18))
    assert long.terms["encode_mixing"] < short.terms["encode_mixing"]
    assert long.terms["decode_mixing"] > short.terms["decode_mixing"]
    assert long.total < short.total


def test_estimate_accepts_model_kinds_and_lowercase():
    """Test the accepted spellings of the model kind."""
    assert estimate(ModelKind.TWLC, REFERENCE_PROFILE) == estimate("twlc", REFERENCE_PROFILE)
    with pytest.raises(ValueError):
        estimate("ALC", REFERENCE_PROFILE)


def test_profile_validation():
    """Test dimension checks."""
    with pytest.raises(ValueError):
        DimProfile(K=6, M=4, T=18)
    with pytest.raises(ValueError):
        DimProfile(K=6, M=3, T=13)
    with pytest.raises(ValueError):
        DimProfile(K=6, M=3, T=18, h_b=0)
    assert REFERENCE_PROFILE.t_m == 9
    assert REFERENCE_PROFILE.ell == 2


def test_report_and_csv(tmp_path):
    """Test one row per profile and kind and the CSV schema."""
    rows = report([REFERENCE_PROFILE, DimProfile(K=6, M=2, T=15)])
    assert len(rows) == 6
    assert rows[0]["model"] == "TWLC"
    assert rows[3]["T_M"] == 5

    path = write_csv(rows, tmp_path / "flops.csv")
    with path.open(encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        assert reader.fieldnames == FLOPS_FIELDS
        written = list(reader)
    assert written[1]["total_flops"] == "2302976"


if __name__ == "__main__":
    pytest.main([__file__])
