import numpy as np
import pytest

from iqpsecret import attacks as atk
from iqpsecret import f2la as F
from iqpsecret import scheme, stats
from iqpsecret.attacks import AttackConfig
from iqpsecret.f2la import BitMatrix, BitVector
from iqpsecret.qrc import QrcParams, build_qrc_instance


def _wide_instance(min_w=19, seed=0):
    while True:
        inst = scheme.generate_stabilizer(300, 360, 4, seed=seed)
        if inst.params.w >= min_w:
            return inst
        seed += 1


@pytest.fixture(scope="module")
def wide():
    return _wide_instance()


# radical ---------------------------------------------------------------------


def test_radical_recovers(wide):
    rep = atk.radical_attack(wide.H, g_max=4)
    assert rep.found and rep.secret == wide.secret
    assert rep.certificate.g_actual == 4


def test_radical_image_support_is_secret_rows(wide):
    K = F.kernel_basis(F.gram(wide.H))
    HK = F.mat_mul(wide.H, K.basis)
    assert F.support_of_columns(HK).tolist() == sorted(wide.secret_rows().tolist())


def test_radical_empty_kernel():
    rep = atk.radical_attack(BitMatrix.identity(6))
    assert not rep.found and rep.kernel_dims == [0]


def test_radical_de_fixes_legacy():
    fixed = 0
    for seed in range(12):
        inst = scheme.generate_stabilizer(300, 360, 4, seed=seed, redundancy_mode="challenge-legacy")
        plain = atk.radical_attack(inst.H, g_max=4)
        de = atk.radical_attack_doubly_even(inst.H, g_max=4)
        if not (plain.found and plain.secret == inst.secret) and de.found:
            assert de.secret == inst.secret
            fixed += 1
    assert fixed >= 1


def test_radical_de_noop_when_plain_succeeds():
    same = 0
    for seed in range(100):
        inst = scheme.generate_stabilizer(300, 360, 4, seed=1000 + seed)
        plain = atk.radical_attack(inst.H, g_max=4)
        if not plain.found:
            continue
        de = atk.radical_attack_doubly_even(inst.H, g_max=4)
        assert de.found and de.secret == plain.secret
        same += 1
    assert same >= 95


def test_doubly_even_part():
    V = BitMatrix.from_array(np.array([[1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
                                       [0, 0, 0, 0, 1, 1, 0, 0, 0, 0]]).T)
    DE = atk.doubly_even_part(V)
    assert DE.cols == 1 and DE.column(0).weight() == 4


# probe attacks -----------------------------------------------------------------


def test_gray_coefficients():
    C = atk.gray_coefficients(5)
    assert C.shape == (31, 5)
    assert len({tuple(r) for r in C}) == 31 and C.any(axis=1).all()
    assert (np.abs(np.diff(C.astype(int), axis=0)).sum(axis=1) == 1).all()


def test_stacked_kernel_is_intersection():
    inst = build_qrc_instance(QrcParams(31, 30), seed=2)
    dense = atk._Dense(inst.H)
    rng = np.random.default_rng(0)
    probes = rng.integers(0, 2, size=(3, inst.n), dtype=np.uint8)
    stacked = F.Subspace.span(atk.stacked_probe_kernel(dense, probes))
    inter = None
    for d in probes:
        K = F.kernel_basis(BitMatrix.from_array(dense.probe_gram(d)))
        inter = K if inter is None else F.subspace_intersection(inter, K)
    assert stacked == inter


def test_probe_gram_definition():
    inst = build_qrc_instance(QrcParams(23, 20), seed=1)
    dense = atk._Dense(inst.H)
    d = np.random.default_rng(3).integers(0, 2, inst.n, dtype=np.uint8)
    Hd = inst.H.take_rows((inst.H @ BitVector.from_array(d)).indices())
    assert np.array_equal(dense.probe_gram(d), F.gram(Hd).to_array())


def test_lazy_ambition_zero_fails():
    inst = build_qrc_instance(QrcParams(23, 13), seed=0)
    rep = atk.lazy_linearity_attack(inst.H, AttackConfig(ambition=0, endurance=25), np.random.default_rng(0))
    assert not rep.found and rep.iterations_used == 25 and rep.candidates_tested == 0


def test_lazy_on_qrc_near_r():
    wins = 0
    for seed in range(5):
        inst = build_qrc_instance(QrcParams(103, 60), seed=seed)
        rep = atk.lazy_linearity_attack(inst.H, AttackConfig(), np.random.default_rng(seed))
        wins += rep.found and rep.secret == inst.secret
    assert wins == 5


def test_double_meyer_k1_matches_lazy():
    inst = build_qrc_instance(QrcParams(47, 30), seed=4)
    cfg = AttackConfig(k=1, endurance=30)
    a = atk.lazy_linearity_attack(inst.H, cfg, np.random.default_rng(9))
    b = atk.double_meyer(inst.H, cfg, np.random.default_rng(9))
    assert a.kernel_dims == b.kernel_dims
    assert a.found == b.found and a.secret == b.secret


def test_double_meyer_extended_qrc():
    inst = build_qrc_instance(QrcParams(103, 155), seed=1)
    rep = atk.double_meyer(inst.H, AttackConfig(k=6), np.random.default_rng(1))
    assert rep.found and rep.secret == inst.secret


def test_seeded_double_meyer():
    inst = build_qrc_instance(QrcParams(103, 130), seed=5)
    rep = atk.double_meyer(inst.H, AttackConfig(k=4), np.random.default_rng(2),
                           seeds=atk.radical_seeds(inst.H))
    assert rep.found and rep.secret == inst.secret and rep.attack == "double-meyer-seeded"


def test_escalate_stops_at_first_success():
    inst = build_qrc_instance(QrcParams(47, 30), seed=3)
    rep = atk.escalate(atk.double_meyer, inst.H, AttackConfig(k=3), 3, rng=np.random.default_rng(0))
    assert rep.found and rep.info["g_th"] == 1


def test_config_validation():
    with pytest.raises(ValueError):
        AttackConfig(p=0.0)
    with pytest.raises(ValueError):
        AttackConfig(ambition=-1)
    assert AttackConfig().replace(k=2).k == 2


# razors ----------------------------------------------------------------------


def test_singletons_identity():
    assert atk.singletons(BitMatrix.identity(5)).tolist() == list(range(5))


def test_singletons_definition():
    rng = np.random.default_rng(4)
    H = F.random_matrix(14, 9, rng)
    H = H.vstack(BitMatrix.from_array(np.eye(9, dtype=np.uint8)[:2]))
    col = F.Subspace.span(H)
    expect = [i for i in range(H.rows) if F.contains(col, BitVector.unit(H.rows, i))]
    assert atk.singletons(H).tolist() == expect
    trimmed, idx = atk.singleton_razor(H)
    assert trimmed.rows == H.rows - len(idx)


def test_singletons_avoid_secret_rows():
    for seed in range(5):
        inst = scheme.generate_stabilizer(300, 360, 4, seed=seed, redundancy_mode="challenge-legacy")
        if not scheme.rad_support_full(inst):
            continue
        assert not set(atk.singletons(inst.H).tolist()) & set(inst.secret_rows().tolist())


def test_hamming_razor_legacy():
    inst = scheme.generate_stabilizer(300, 360, 4, seed=3, redundancy_mode="challenge-legacy")
    rep = atk.hamming_razor(inst.H, AttackConfig(p=0.25, endurance=50), np.random.default_rng(0), g_max=4)
    assert rep.found and rep.secret == inst.secret


def test_hamming_razor_no_redundancy():
    # m2 = 0: no kernel ever appears, the final solve H s = 1 is used
    rng = np.random.default_rng(0)
    m1, g, d = 40, 2, 16
    D = scheme.sample_D(m1, d, rng)
    Fm = scheme.sample_F(m1, g, D, rng)
    H = Fm.hstack(D)
    rep = atk.hamming_razor(H, AttackConfig(p=0.25, endurance=5), rng)
    assert rep.info["redundant"] == 0
    assert rep.found and (H @ rep.secret) == BitVector.ones(m1)


# suggest_p -------------------------------------------------------------------


CHALLENGE = scheme.InstanceParams(n=300, m=360, g=4, m1=96, d=35)


def test_suggest_p_challenge():
    lo, hi = atk.suggest_p(CHALLENGE)
    # the quoted range [0.01, 0.13] is this interval rounded to two decimals
    assert (round(lo, 2), round(hi, 2)) == (0.01, 0.13)


def test_suggest_p_empty():
    p = scheme.InstanceParams(n=300, m=360, g=4, m1=96, d=296)
    with pytest.raises(atk.EmptyInterval):
        atk.suggest_p(p)


def test_suggest_p_grid_oracle():
    p = CHALLENGE
    _, k_inf, _ = stats.k_infty(p.m1, p.m1 - p.g - p.d, offset=1.0)
    grid = np.linspace(0, 1, 200_001)
    ok = (grid * p.m2 > p.m2 - (p.n - p.g - p.d)) & (grid * p.m1 < k_inf)
    lo, hi = atk.suggest_p(p)
    step = grid[1]
    assert abs(grid[ok].min() - lo) <= step and abs(grid[ok].max() - hi) <= step
