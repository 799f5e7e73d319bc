"""Perturbation families: declared moduli are policed, measured errors obey
the first-order rate and the growth-envelope ceiling."""

import math

import numpy as np
import pytest

from fidhvi.errors import ConfigError, ConstantViolation
from fidhvi.perturbation import (
    PerturbationFamily,
    linear_shift_family,
    run_perturbation_study,
    validate_family,
    y_error_bound,
)
from fidhvi.presets import get_preset


def test_linear_shift_family_shape():
    spec = get_preset("linear_decay").build(cells=64)
    fam = linear_shift_family(spec)
    assert fam.modulus(0.0) == 0.0
    assert fam.modulus(0.25) == pytest.approx(0.25)  # |N| = |b| = 1
    member = fam.member(0.1)
    x = np.array([0.4])
    base_sel = spec.functional.subgradient_selection(0.0, x)
    assert member.functional.subgradient_selection(0.0, x) == pytest.approx(base_sel + 0.1)
    assert member.functional.growth == pytest.approx(spec.functional.growth + 0.1)
    assert member.functional.relaxed_monotonicity == spec.functional.relaxed_monotonicity
    with pytest.raises(ConfigError):
        fam.member(-0.1)
    with pytest.raises(ConfigError):
        linear_shift_family(spec, direction=np.zeros(1))
    validate_family(fam, (1e-1, 1e-2))


def test_validate_family_polices_every_declaration():
    spec = get_preset("linear_decay").build(cells=64)
    honest = linear_shift_family(spec)
    with pytest.raises(ConstantViolation):  # nonpositive margin floor
        validate_family(
            PerturbationFamily(spec, honest.member, honest.modulus, floor=0.0), (0.1,)
        )
    with pytest.raises(ConstantViolation):  # modulus must vanish at zero
        validate_family(
            PerturbationFamily(spec, honest.member, lambda d: d + 1.0, floor=1.5), (0.1,)
        )
    with pytest.raises(ConstantViolation):  # modulus must be nondecreasing
        validate_family(
            PerturbationFamily(spec, honest.member, lambda d: -d, floor=1.5),
            (0.1, 0.2),
        )
    with pytest.raises(ConstantViolation):  # understated modulus is caught by sampling
        validate_family(
            PerturbationFamily(spec, honest.member, lambda d: 0.1 * d, floor=1.5),
            (0.1,),
        )
    with pytest.raises(ConfigError):  # members must reuse the base grid
        rebuilt = lambda d: get_preset("linear_decay").build(cells=128)
        validate_family(
            PerturbationFamily(spec, rebuilt, honest.modulus, floor=1.5), (0.1,)
        )


def test_y_error_bound_formula():
    spec = get_preset("linear_decay").build(cells=16)
    # margin 1.5, m_g 1: 0.3/1.5 + 0.6/1.5
    assert y_error_bound(spec, 0.3, 0.6) == pytest.approx(0.6, rel=1e-14)


def test_study_measures_first_order_convergence():
    spec = get_preset("linear_decay").build(cells=256)
    study = run_perturbation_study(spec, deltas=(1e-1, 1e-2, 1e-3), tol=1e-10)
    assert 0.9 <= study.slope <= 1.1
    hand_k2 = 0.1 * (1.0 / 1.5 + 1.0) / math.sqrt(math.pi)
    assert study.k2 == pytest.approx(hand_k2, rel=1e-12)
    assert [r.delta for r in study.rows] == [1e-1, 1e-2, 1e-3]
    for row in study.rows:
        assert row.v_delta == pytest.approx(row.delta)
        assert 0.0 < row.sup_z_err < row.gronwall_ceiling
        assert row.sup_y_err < row.y_bound + 1e-12
    # error magnitudes scale with the modulus, not with iteration noise
    assert study.rows[0].sup_z_err > 10.0 * study.rows[1].sup_z_err


def test_thread_fanout_is_deterministic():
    spec = get_preset("linear_decay").build(cells=128)
    seq = run_perturbation_study(spec, deltas=(1e-1, 1e-2), tol=1e-10, threads=1)
    par = run_perturbation_study(spec, deltas=(1e-1, 1e-2), tol=1e-10, threads=2)
    for a, b in zip(seq.rows, par.rows):
        assert a == b
    assert seq.slope == par.slope


def test_study_rejects_empty_or_negative_sizes():
    spec = get_preset("linear_decay").build(cells=64)
    with pytest.raises(ConfigError):
        run_perturbation_study(spec, deltas=())
    with pytest.raises(ConfigError):
        run_perturbation_study(spec, deltas=(0.1, -0.2))
