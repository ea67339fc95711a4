import math
import os

import pytest

import fheprotect as fp


@pytest.fixture(scope="module")
def ctx():
    return fp.EncryptionContext.create(fp.ContextParams(128, 24), 1)


def test_encrypt_round_trip(ctx):
    c = fp.encrypt([1.0, 2.0, 3.0], ctx)
    assert c.capacity == 128
    assert fp.decrypt(c, ctx) == [1.0, 2.0, 3.0]
    assert c.depth_used == 0


def test_fold_sum_matches_python_sum(ctx):
    v = [0.1 * i for i in range(100)]
    s = fp.fold_add_all(fp.encrypt(v, ctx), len(v))
    assert math.isclose(fp.decrypt_all_slots(s, ctx)[0], sum(v), abs_tol=1e-9)
    assert s.rotations_used == 7


def test_errors_carry_kind(ctx):
    other = fp.EncryptionContext.create(fp.ContextParams(128, 24), 2)
    with pytest.raises(fp.Error) as info:
        fp.decrypt(fp.encrypt([1.0], ctx), other)
    assert info.value.kind == "KeyMismatch"
    with pytest.raises(fp.Error) as info:
        fp.gen_params(5, 0, 2, 1)
    assert info.value.kind == "InfeasibleParams"


def test_polyprotect_encrypted_matches_plain(ctx):
    p = fp.gen_params(5, 4, 50, 3)
    v = [math.sin(i) / 6.0 for i in range(64)]
    plain = fp.protect_plain(v, p)
    dec = fp.decrypt_template(fp.protect_encrypted(v, p, ctx), ctx)
    assert len(plain) == len(dec) == 60
    assert max(abs(a - b) for a, b in zip(plain, dec)) < 1e-9


def test_encrypted_cosine(ctx):
    approx = fp.fit_inv_sqrt(8, fp.OCTAVE_PAIR_DOMAIN.lo, fp.OCTAVE_PAIR_DOMAIN.hi)
    a = [math.cos(i) for i in range(16)]
    b = [math.sin(3 * i) for i in range(16)]
    plan = fp.NormalizationPlan.from_norm_bounds(
        fp.octave_norm_bound(math.hypot(*a)), fp.octave_norm_bound(math.hypot(*b))
    )
    s = fp.cosine_encrypted(fp.encrypt(a, ctx), fp.encrypt(b, ctx), 16, plan, approx)
    got = fp.decrypt_all_slots(s, ctx)[0]
    assert abs(got - fp.cosine_plain(a, b)) <= fp.cosine_tolerance(approx)


def test_rank1_and_metrics():
    data = fp.gen_synthetic_dataset(num_ids=10, samples_per_id=3, seed=5)
    assert len(data) == 30
    assert fp.rank1_accuracy(data, encrypted=True) >= 0.8
    assert math.isclose(fp.privacy_gain(0.9812, 0.5222), 0.459)


def test_leakage_report_csv():
    data = fp.gen_synthetic_dataset(num_ids=40, samples_per_id=2, seed=2)
    csv = fp.leakage_report(data, ["MRL+FHE"])
    lines = csv.strip().splitlines()
    assert lines[0] == "attribute,variant,a_o,a_p,pg_x100,sr,chance"
    assert len(lines) == 4


def test_cli_in_process(tmp_path):
    code, out, err = fp.run_cli(["--out-dir", str(tmp_path), "bench-sum", "--sizes", "2..8", "--no-wall"])
    assert code == 0, err
    assert os.path.exists(tmp_path / "bench_sum.csv")
    code, _, err = fp.run_cli(["bench-sum", "--nope"])
    assert code == 2
