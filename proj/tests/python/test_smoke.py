# Copyright 2026 The fairlds Authors
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

import fairlds

SMALL = """
[schema]
attributes = a0, a1, c0
targets = a0, a1

[pipeline]
total_n = 400
corpus_n = 4000
n_edit = 800
gmm_k = 4
seed = 3

[svm]
epochs = 300

[synthetic]
dim = 8
"""


def test_kl_matches_closed_form():
    assert fairlds.kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-14)
    with pytest.raises(fairlds.LdsError) as info:
        fairlds.kl_divergence([0.5, 0.5], [1.0, 0.0])
    assert info.value.args[0] == "support-mismatch"


def test_fairness_discrepancy():
    r = fairlds.fairness_discrepancy(["t", "c"], ["t"], [0.45, 0.05, 0.45, 0.05], [0.25] * 4, 0.1)
    assert r["imbalance"] == 0.0
    assert r["discrepancy"] == pytest.approx(0.1 * (0.9 * math.log(1.8) + 0.1 * math.log(0.2)), abs=1e-12)
    assert fairlds.imbalance_score(["a", "b"], ["a", "b"], [1, 0, 0, 0]) == pytest.approx(math.log(4))


def test_edit_places_codes_at_alpha():
    z = np.array([[1.0, 2.0, 7.0], [-4.0, 0.5, 1.0]])
    normals = np.eye(3)[:2]
    out = fairlds.edit(z, normals, [1, 0], 3.0)
    np.testing.assert_array_equal(out, [[3, -3, 7], [3, -3, 1]])
    with pytest.raises(fairlds.LdsError):
        fairlds.edit(z, 2 * normals, [1, 0])


def test_sample_fair_balances_subgroups(tmp_path):
    result = fairlds.sample_fair(SMALL)
    assert result["latents"].shape == (400, 8)
    assert sorted(set(result["subgroups"])) == ["00", "01", "10", "11"]
    assert result["fair"]["discrepancy"] < result["baseline"]["discrepancy"]

    path = str(tmp_path / "set.ldsl")
    fairlds.write_latent_file(path, result["latents"])
    back = fairlds.read_latent_file(path)
    np.testing.assert_allclose(back, result["latents"], rtol=1e-6, atol=1e-6)


def test_config_errors_raise():
    with pytest.raises(fairlds.LdsError) as info:
        fairlds.sample_fair("[pipeline]\nalhpa = 3\n")
    assert info.value.args[0] == "parse"
    assert "[pipeline]" in fairlds.default_config()
