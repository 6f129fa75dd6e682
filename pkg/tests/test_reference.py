import numpy as np
import pytest

from stopping_predictor.core import EstimatorParams, PendingError, Schedule
from stopping_predictor.processes import ProcessSpec, generate
from stopping_predictor.reference import (CapExceededError, count_ending, hat_zeta,
                                          naive_full_run, naive_J, naive_zetas,
                                          tilde_distribution_check)

M1 = ProcessSpec.markov([[0.9, 0.1], [0.2, 0.8]], order=1)


def test_all_zeros_run():
    ref = naive_full_run([0] * 50)
    assert ref.zetas == list(range(50))
    assert ref.lambdas == list(range(50))
    assert ref.estimate(49) == {0: 49}


def test_cap():
    with pytest.raises(CapExceededError):
        naive_full_run([0] * 11, cap=10)


def test_deterministic():
    path = generate(M1.with_seed(3), 150).tolist()
    a = naive_full_run(path, record_deltas=True)
    b = naive_full_run(path, record_deltas=True)
    assert a == b and a.delta_hat


def test_count_ending_literal():
    assert count_ending([0, 1, 0, 1, 0], (0,), 0, 4) == 3
    assert count_ending([0, 1, 0, 1, 0], (0, 1), 1, 4) == 2
    assert count_ending([0, 1, 0, 1, 0], (1, 0), 0, 1) == 0


def test_naive_J():
    assert naive_J(Schedule.identity(), 7) == 7
    assert naive_J(Schedule.from_table([1, 1, 2, 3, 3, 4]), 2) == 3  # l(4) = 3 > 2


def test_hat_zeta_all_zeros():
    for k in range(6):
        assert hat_zeta([0] * 20, k, Schedule.identity()) == -k


def test_hat_zeta_k0():
    assert hat_zeta([1, 0, 2], 0, Schedule.identity()) == 0


def test_hat_zeta_pending():
    with pytest.raises(PendingError):
        hat_zeta([0, 1, 2], 1, Schedule.identity())


@pytest.mark.parametrize("sched", [Schedule.identity(), Schedule.logarithmic(),
                                   Schedule.from_table([(k + 1) // 2 for k in range(1, 301)])])
def test_shift_identity(sched):
    rng = np.random.default_rng(8)
    checked = 0
    for case in range(100):
        A = int(rng.integers(2, 4))
        path = [int(v) for v in rng.integers(0, A, int(rng.integers(20, 200)))]
        zetas = naive_zetas(path, sched)
        for k in range(1, len(zetas)):
            l = zetas[k]
            # the path seen from time l looks back exactly l steps in k recurrences
            assert hat_zeta(path[:l + 1], k, sched) == -l
            checked += 1
    assert checked > 300


def test_tilde_check_point_mass():
    g = tilde_distribution_check(ProcessSpec.iid([1.0]), 3, 50)
    assert g.statistic == 0.0 and g.passed
    assert g.counts == {(0, 0, 0): 50}


@pytest.mark.parametrize("spec", [ProcessSpec.iid([0.5, 0.5], seed=1), M1.with_seed(2)])
def test_tilde_check_accepts(spec):
    g = tilde_distribution_check(spec, 2, 2000)
    assert g.df == 3
    assert g.passed, g


def test_tilde_check_rejects_wrong_law():
    # reconstructed blocks of the order-1 chain are not fair-coin blocks
    g = tilde_distribution_check(M1.with_seed(4), 2, 2000)
    coin = {b: 500 for b in g.counts}
    stat = sum((g.counts[b] - coin[b]) ** 2 / coin[b] for b in g.counts)
    assert stat > g.critical


def test_tilde_check_validates_m():
    with pytest.raises(ValueError):
        tilde_distribution_check(M1, 5, 10)


def test_params_are_validated():
    from stopping_predictor.core import ParameterError
    with pytest.raises(ParameterError):
        naive_full_run([0, 1], EstimatorParams(beta=0.5, gamma=0.5))
