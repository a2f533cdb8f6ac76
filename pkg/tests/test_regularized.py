import math

import numpy as np
import pytest

from fracture1d.material import builtin_lj, c_wstar
from fracture1d.regularized import (
    DiscreteField,
    Infeasible,
    OverlapWarning,
    SolveSettings,
    _e_energy,
    _v_energy,
    eval_E_eps,
    eval_V_eps,
    grad_E_eps,
    grad_V_eps,
    minimize,
    mm_lower_bound_H,
    mollify_sharp_candidate,
    phi_interpolator,
    project_H,
    project_h,
    transition_count_slopes,
    transition_count_values,
)
from fracture1d.sharp import (
    PiecewiseConstantField,
    build_sharp_minimizer,
    v_n,
)

LJ = builtin_lj()
C_LJ = 4.0 * math.sqrt(2.0) / 15.0


# ------------------------------------------------------------ energies


def test_E_energy_at_the_well_is_zero():
    field = DiscreteField(1.0, np.ones(101))
    assert eval_E_eps(field, 0.05, LJ) == 0.0


def test_E_energy_homogeneous_compression():
    field = DiscreteField(0.8, np.full(201, 1.25))
    # lam * wstar(1/lam) = W(0.8) = 0.0625, exact under the trapezoid rule.
    assert eval_E_eps(field, 0.05, LJ) == pytest.approx(0.0625, abs=1e-12)


def test_V_energy_homogeneous_compression():
    field = DiscreteField(0.8, np.linspace(0.0, 1.0, 201))
    assert eval_V_eps(field, 0.05, 200.0, LJ) == pytest.approx(0.0625, abs=1e-12)


def test_V_energy_identity_is_zero():
    field = DiscreteField(1.0, np.linspace(0.0, 1.0, 101))
    assert eval_V_eps(field, 0.05, 200.0, LJ) == pytest.approx(0.0, abs=1e-20)


def test_mollified_interface_recovers_surface_constant():
    pc = PiecewiseConstantField(1.4, (1.0,), (1.0, 0.0))
    field = mollify_sharp_candidate(pc, 0.02, LJ, 4000)
    rescaled = eval_E_eps(field, 0.02, LJ) / 0.02
    assert rescaled == pytest.approx(C_LJ, rel=0.05)


def test_mollified_interface_gap_shrinks_with_epsilon():
    pc = PiecewiseConstantField(1.4, (1.0,), (1.0, 0.0))
    gaps = []
    for eps in (0.04, 0.02):
        field = mollify_sharp_candidate(pc, eps, LJ, 4000)
        gaps.append(abs(eval_E_eps(field, eps, LJ) / eps - C_LJ))
    assert gaps[1] <= gaps[0]


def test_mollified_sharp_minimizer_recovers_v4():
    sharp = build_sharp_minimizer(4, 1.5, "A", C_LJ, 200.0).field
    with pytest.warns(OverlapWarning):
        field = mollify_sharp_candidate(sharp, 0.08, LJ, 4000)
    field = mollify_sharp_candidate(sharp, 0.01, LJ, 4000)
    rescaled = eval_V_eps(field, 0.01, 200.0, LJ) / 0.01
    assert rescaled == pytest.approx(v_n(4, C_LJ, 200.0, 1.5), rel=0.05)


def test_mollify_leaves_transition_free_fields_alone():
    pc = PiecewiseConstantField(1.0, (), (1.0,))
    field = mollify_sharp_candidate(pc, 0.02, LJ, 64)
    assert np.array_equal(field.values, np.ones(65))


# ------------------------------------------------------------ gradients


def _central_difference(fun, values, step=1e-6):
    out = np.zeros_like(values)
    for i in range(values.size):
        vp = values.copy()
        vm = values.copy()
        vp[i] += step
        vm[i] -= step
        out[i] = (fun(vp) - fun(vm)) / (2.0 * step)
    return out


def test_grad_E_matches_finite_differences():
    rng = np.random.default_rng(3)
    lam, eps = 1.3, 0.05
    for _ in range(20):
        raw = 1.0 / lam + 0.4 * rng.standard_normal(49)
        field = project_H(raw, lam)
        g = grad_E_eps(field, eps, LJ)
        fd = _central_difference(lambda v: _e_energy(v, lam, eps, LJ), field.values)
        rel = np.max(np.abs(fd - g) / (1.0 + np.abs(fd)))
        assert rel <= 1e-6


@pytest.mark.parametrize("lam,mu,eps", [(1.5, 200.0, 0.05), (1.2, 50.0, 0.1), (0.9, 10.0, 0.1)])
def test_grad_V_matches_finite_differences(lam, mu, eps):
    rng = np.random.default_rng(5)
    for _ in range(7):
        base = project_h(np.linspace(0.0, 1.0, 41) + 0.1 * rng.standard_normal(41), lam)
        values = base.values.copy()
        values[1:-1] += 0.01 * rng.random(39)  # interior, monotone not required
        g = grad_V_eps(DiscreteField(lam, values), eps, mu, LJ)
        fd = _central_difference(lambda v: _v_energy(v, lam, eps, mu, LJ), values)
        rel = np.max(np.abs(fd - g) / (1.0 + np.abs(fd)))
        assert rel <= 1e-6


def test_grad_E_constant_field_pattern():
    lam, eps, n = 1.1, 0.07, 32
    field = DiscreteField(lam, np.full(n + 1, 0.6))
    g = grad_E_eps(field, eps, LJ)
    d = lam / n
    wp = LJ.wstar_prime(0.6)
    expected = np.full(n + 1, d * wp)
    expected[0] = expected[-1] = 0.5 * d * wp
    assert np.allclose(g, expected, atol=1e-15)


def test_grad_E_zero_at_the_well():
    field = DiscreteField(1.0, np.ones(33))
    assert np.allclose(grad_E_eps(field, 0.05, LJ), 0.0, atol=1e-15)


# ------------------------------------------------------------ projections


def _project_H_oracle(raw, lam):
    """Exhaustive active-set enumeration of the projection QP (small N)."""
    raw = np.asarray(raw, dtype=float)
    n = raw.size
    d = lam / (n - 1)
    a = np.full(n, d)
    a[0] = a[-1] = 0.5 * d
    best = None
    for mask in range(1, 1 << n):
        keep = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        denom = float(a[keep] @ a[keep])
        theta = (float(a[keep] @ raw[keep]) - 1.0) / denom
        cand = np.where(keep, raw - theta * a, 0.0)
        if np.all(cand >= -1e-12):
            cand = np.maximum(cand, 0.0)
            dist = float(np.sum((cand - raw) ** 2))
            if best is None or dist < best[0] - 1e-15:
                best = (dist, cand)
    return best[1]


def _project_h_oracle(raw, lam):
    """Enumerate pooled-block patterns of the pinned monotone projection."""
    raw = np.asarray(raw, dtype=float)
    n = raw.size
    best = None
    for mask in range(1 << (n - 1)):
        blocks = [[0]]
        for i in range(n - 1):
            if (mask >> i) & 1:
                blocks[-1].append(i + 1)
            else:
                blocks.append([i + 1])
        vals = []
        feasible = True
        for block in blocks:
            if 0 in block and n - 1 in block:
                feasible = False
                break
            if 0 in block:
                vals.append(0.0)
            elif n - 1 in block:
                vals.append(1.0)
            else:
                vals.append(float(np.mean(raw[block])))
        if not feasible:
            continue
        if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
            continue
        cand = np.empty(n)
        for block, v in zip(blocks, vals):
            cand[block] = v
        dist = float(np.sum((cand - raw) ** 2))
        if best is None or dist < best[0] - 1e-15:
            best = (dist, cand)
    return best[1]


def test_project_H_matches_enumeration_oracle():
    rng = np.random.default_rng(17)
    for _ in range(25):
        n = int(rng.integers(4, 10))
        raw = 2.0 * rng.standard_normal(n)
        lam = float(rng.uniform(0.3, 3.0))
        mine = project_H(raw, lam).values
        oracle = _project_H_oracle(raw, lam)
        assert np.max(np.abs(mine - oracle)) <= 1e-10


def test_project_H_feasible_input_is_fixed():
    field = project_H(np.array([0.2, 1.1, 0.9, 1.4, 0.2]), 1.0)
    again = project_H(field.values, 1.0)
    assert np.max(np.abs(field.values - again.values)) <= 1e-14
    d = 1.0 / 4
    assert abs(np.trapezoid(field.values, dx=d) - 1.0) <= 1e-12


def test_project_H_zeros_input_lands_on_weight_direction():
    # The Euclidean projection of zero is proportional to the trapezoid
    # weights, (2/7, 4/7, 4/7, 4/7, 2/7) for lam = 2, N = 4.
    out = project_H(np.zeros(5), 2.0).values
    assert np.allclose(out, np.array([2.0, 4.0, 4.0, 4.0, 2.0]) / 7.0, atol=1e-12)
    assert np.allclose(out, _project_H_oracle(np.zeros(5), 2.0), atol=1e-12)


def test_project_H_spike_input():
    raw = np.zeros(9)
    raw[4] = 50.0
    out = project_H(raw, 1.0)
    assert np.all(out.values >= 0.0)
    assert abs(np.trapezoid(out.values, dx=1.0 / 8) - 1.0) <= 1e-12
    assert np.max(np.abs(out.values - _project_H_oracle(raw, 1.0))) <= 1e-10


def test_project_H_rejects_nonpositive_domain():
    with pytest.raises(Infeasible):
        project_H(np.ones(5), 0.0)


def test_project_h_matches_enumeration_oracle():
    rng = np.random.default_rng(19)
    for _ in range(25):
        n = int(rng.integers(4, 9))
        raw = np.linspace(0.0, 1.0, n) + 0.8 * rng.standard_normal(n)
        mine = project_h(raw, 1.3).values
        oracle = _project_h_oracle(raw, 1.3)
        assert np.max(np.abs(mine - oracle)) <= 1e-9
        again = project_h(mine, 1.3).values
        assert np.max(np.abs(again - mine)) <= 1e-14


def test_project_h_monotone_input_is_fixed():
    raw = np.array([0.0, 0.1, 0.4, 0.4, 0.9, 1.0])
    out = project_h(raw, 1.2).values
    assert np.array_equal(out, raw)


def test_project_h_reversed_ramp_collapses():
    out = project_h(np.linspace(1.0, 0.0, 9), 1.0).values
    assert out[0] == 0.0 and out[-1] == 1.0
    assert np.all(np.diff(out) >= 0.0)
    assert np.allclose(out[1:-1], 0.5, atol=1e-12)


def test_project_h_is_stable_under_small_noise():
    rng = np.random.default_rng(29)
    ramp = np.linspace(0.0, 1.0, 200)
    noise = 0.01 * rng.standard_normal(200)
    out = project_h(ramp + noise, 1.0).values
    # Projections are nonexpansive and the ramp is feasible.
    assert np.linalg.norm(out - ramp) <= np.linalg.norm(noise)


def test_projections_beat_random_feasible_points():
    rng = np.random.default_rng(31)
    raw = 1.5 * rng.standard_normal(11)
    lam = 1.4
    mine = project_H(raw, lam).values
    my_dist = np.sum((mine - raw) ** 2)
    for _ in range(1000):
        cand = project_H(rng.standard_normal(11) * 2.0, lam).values
        assert np.sum((cand - raw) ** 2) >= my_dist - 1e-12

    rawh = np.linspace(0.0, 1.0, 11) + 0.7 * rng.standard_normal(11)
    mineh = project_h(rawh, lam).values
    my_dist_h = np.sum((mineh - rawh) ** 2)
    for _ in range(1000):
        cand = project_h(rng.standard_normal(11) * 2.0, lam).values
        assert np.sum((cand - rawh) ** 2) >= my_dist_h - 1e-12


# ------------------------------------------------------------ transitions


def test_transition_counting():
    assert transition_count_values(np.array([1.0, 1.0, 0.9, 0.1, 0.0])) == 1
    assert transition_count_values(np.array([0.0, 1.0, 0.0, 1.0])) == 3
    ramp = DiscreteField(1.0, np.linspace(0.0, 1.0, 33))
    assert transition_count_slopes(ramp) == 0


# ------------------------------------------------------------ minimize


def test_minimize_compression_E():
    settings = SolveSettings(lam=0.8, epsilon=0.05, grid_n=1000)
    result = minimize("E", LJ, settings)
    assert np.max(np.abs(result.minimizer.values - 1.25)) <= 1e-4
    assert result.energy == pytest.approx(0.0625, abs=1e-6)
    assert result.converged


def test_minimize_compression_V():
    settings = SolveSettings(lam=0.8, epsilon=0.05, mu=200.0, grid_n=1000)
    result = minimize("V", LJ, settings)
    ramp = np.linspace(0.0, 1.0, 1001)
    assert np.max(np.abs(result.minimizer.values - ramp)) <= 1e-4
    assert result.energy == pytest.approx(0.0625, abs=1e-6)


@pytest.mark.parametrize("lam", [0.6, 0.8, 1.0])
def test_minimize_compression_homogeneous_both_functionals(lam):
    expected = lam * LJ.wstar(1.0 / lam)
    st = SolveSettings(lam=lam, epsilon=0.05, mu=150.0, grid_n=400)
    res_e = minimize("E", LJ, st)
    assert np.max(np.abs(res_e.minimizer.values - 1.0 / lam)) <= 1e-4
    assert res_e.energy == pytest.approx(expected, abs=1e-6)
    res_v = minimize("V", LJ, st)
    assert np.max(np.abs(res_v.minimizer.values - np.linspace(0, 1, 401))) <= 1e-4
    assert res_v.energy == pytest.approx(expected, abs=1e-6)


def test_minimize_identity_V():
    settings = SolveSettings(lam=1.0, epsilon=0.05, mu=300.0, grid_n=500)
    result = minimize("V", LJ, settings)
    ramp = np.linspace(0.0, 1.0, 501)
    assert np.max(np.abs(result.minimizer.values - ramp)) <= 1e-6
    assert result.energy <= 1e-8


def test_minimize_interface_E():
    settings = SolveSettings(lam=1.4, epsilon=0.02, grid_n=4000)
    result = minimize("E", LJ, settings)
    assert result.transition_count == 1
    assert result.rescaled_energy == pytest.approx(C_LJ, rel=0.10)


def test_minimize_energy_history_never_increases():
    settings = SolveSettings(lam=1.4, epsilon=0.05, grid_n=600, multistart=2)
    result = minimize("E", LJ, settings)
    hist = np.asarray(result.energy_history)
    assert np.all(np.diff(hist) <= 0.0)


def test_minimize_respects_explicit_init():
    settings = SolveSettings(lam=1.0, epsilon=0.05, grid_n=64)
    init = DiscreteField(1.0, np.ones(65))
    result = minimize("E", LJ, settings, init=init)
    assert result.start_label == "user"
    assert result.energy == pytest.approx(0.0, abs=1e-15)


def test_minimize_named_strategy_and_determinism():
    settings = SolveSettings(lam=1.2, epsilon=0.05, grid_n=128, multistart=1, seed=42)
    a = minimize("E", LJ, settings, init="random-0")
    b = minimize("E", LJ, settings, init="random-0")
    assert a.start_label == "random-0"
    assert np.array_equal(a.minimizer.values, b.minimizer.values)
    with pytest.raises(ValueError):
        minimize("E", LJ, settings, init="nope")


def test_minimize_rejects_unknown_functional():
    with pytest.raises(ValueError):
        minimize("Q", LJ, SolveSettings(lam=1.0, epsilon=0.1, grid_n=32))


# ------------------------------------------------------------ lower bound


def test_modica_mortola_bound_on_iterates():
    settings = SolveSettings(lam=1.4, epsilon=0.02, grid_n=2000)
    result = minimize("E", LJ, settings)
    bound = mm_lower_bound_H(result.minimizer, LJ)
    assert result.rescaled_energy >= bound * 0.98
    # And on a hand-built mollified field.
    pc = PiecewiseConstantField(1.4, (1.0,), (1.0, 0.0))
    field = mollify_sharp_candidate(pc, 0.02, LJ, 2000)
    assert eval_E_eps(field, 0.02, LJ) / 0.02 >= mm_lower_bound_H(field, LJ) * 0.98


def test_phi_interpolator_matches_closed_form():
    phi = phi_interpolator(LJ, s_max=1.0)
    # Phi(1) is the surface constant itself.
    assert float(phi(1.0)) == pytest.approx(C_LJ, abs=1e-6)


def test_settings_validation():
    with pytest.raises(ValueError):
        SolveSettings(lam=-1.0, epsilon=0.1)
    with pytest.raises(ValueError):
        SolveSettings(lam=1.0, epsilon=0.0)
    with pytest.raises(ValueError):
        SolveSettings(lam=1.0, epsilon=0.1, grid_n=8)
    with pytest.raises(ValueError):
        SolveSettings(lam=1.0, epsilon=0.1, mu=-5.0)


def test_discrete_field_validation():
    with pytest.raises(ValueError):
        DiscreteField(1.0, np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        DiscreteField(1.0, np.array([0.0, np.nan, 1.0]))
    with pytest.raises(ValueError):
        DiscreteField(-1.0, np.zeros(5))
