import csv
import math
import textwrap

import pytest

from bellprobe.cli import load_config, main
from bellprobe.errors import EXIT_CODES


def write(tmp_path, name, body):
    p = tmp_path / name
    p.write_text(textwrap.dedent(body))
    return p


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def estimates(out):
    return {r["parameter"]: r for r in rows(out / "estimates.csv")}


SINGLE_Z = """
    [experiment]
    kind = single-qubit
    mode = exact
    t = 0.785398163397
    [hamiltonian]
    jx = 0
    jy = 0
    jz = 1
"""

RELAX = """
    [experiment]
    kind = relaxation
    mode = exact
    seed = 3
    t = 0.5
    [relaxation]
    t1 = 2
    t2 = 1
"""


def test_single_qubit_exact_z_axis(tmp_path):
    cfg = write(tmp_path, "c.ini", SINGLE_Z)
    assert main(["single-qubit", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    est = estimates(tmp_path / "o")
    assert float(est["abs_Jhat_z"]["estimate"]) == pytest.approx(1.0)
    recs = rows(tmp_path / "o" / "records.csv")
    assert len(recs) == 4 and recs[0]["outcome_label"] == "BellZ:Phi+"


def test_relaxation_exact(tmp_path):
    cfg = write(tmp_path, "c.ini", RELAX)
    assert main(["relaxation", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    est = estimates(tmp_path / "o")
    assert float(est["T1"]["estimate"]) == pytest.approx(2.0, rel=1e-9)
    assert float(est["T2"]["estimate"]) == pytest.approx(1.0, rel=1e-9)
    assert est["T1"]["seed"] == "3" and est["T1"]["mode"] == "exact"


def test_exchange_iso_row(tmp_path):
    cfg = write(
        tmp_path,
        "c.ini",
        f"""
        [experiment]
        kind = exchange-iso
        t = {math.pi / 8!r}
        [exchange]
        jx = 1
        jy = 1
        jz = 1
        """,
    )
    assert main(["exchange-iso", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert estimates(tmp_path / "o")["sin_2Jt"]["estimate"] == "0.707106781"


def test_single_qubit_with_signs_and_schedule(tmp_path):
    cfg = write(
        tmp_path,
        "c.ini",
        """
        [experiment]
        kind = single-qubit
        mode = sampled
        shots = 100000
        seed = 4
        t = 0.6
        [hamiltonian]
        jx = 0.333333333333
        jy = -0.666666666667
        jz = 0.666666666667
        j_max = 1.5
        [schedule]
        j_max = 1.5
        n_s = 32
        """,
    )
    assert main(["single-qubit", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    est = estimates(tmp_path / "o")
    assert float(est["Jhat_y"]["estimate"]) < 0 < float(est["Jhat_z"]["estimate"])
    assert est["Jhat_x"]["notes"] == "global_sign_fixed=true"
    assert est["Jhat_x[Z+X]"]["notes"] == "global_sign_fixed=false"
    assert float(est["J"]["estimate"]) == pytest.approx(1.0, rel=1e-2)
    assert est["J"]["N_S"] == "32"


def test_scaling_shape(tmp_path):
    cfg = write(
        tmp_path,
        "c.ini",
        """
        [experiment]
        kind = scaling
        seed = 9
        [hamiltonian]
        jx = 0
        jy = 0.6
        jz = 0.8
        [scaling]
        n_s = 16, 64
        n_e = 1000, 100000
        repeats = 3
        """,
    )
    assert main(["scaling", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert len(rows(tmp_path / "o" / "scaling.csv")) == 4 * 3
    assert len(rows(tmp_path / "o" / "scaling_summary.csv")) == 4


def test_validate_rejects_unphysical_relaxation(tmp_path, capsys):
    cfg = write(tmp_path, "c.ini", RELAX.replace("t2 = 1", "t2 = 5"))
    code = main(["validate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == EXIT_CODES["CONFIG"] != 0
    assert "T2 <= 2*T1" in capsys.readouterr().err
    err = rows(tmp_path / "o" / "errors.csv")[0]
    assert err["category"] == "CONFIG"


def test_validate_accepts_good_config(tmp_path):
    assert main(["validate", "--config", str(write(tmp_path, "c.ini", RELAX))]) == 0


def test_unknown_experiment_kind(tmp_path):
    cfg = write(tmp_path, "c.ini", RELAX.replace("kind = relaxation", "kind = teleport"))
    assert main(["validate", "--config", str(cfg)]) == EXIT_CODES["CONFIG"]


def test_kind_mismatch_with_subcommand(tmp_path):
    cfg = write(tmp_path, "c.ini", RELAX)
    assert main(["exchange-iso", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CODES["CONFIG"]


def test_missing_field_is_named(tmp_path, capsys):
    cfg = write(tmp_path, "c.ini", RELAX.replace("t1 = 2", ""))
    assert main(["relaxation", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "[relaxation] t1" in capsys.readouterr().err


def test_estimator_failure_writes_error_record(tmp_path):
    cfg = write(tmp_path, "c.ini", SINGLE_Z.replace("t = 0.785398163397", "t = 3.14159265358979"))
    code = main(["single-qubit", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == EXIT_CODES["DEGENERATE_TIME"]
    assert rows(tmp_path / "o" / "errors.csv")[0]["category"] == "DEGENERATE_TIME"


def test_model_violation_exit_code(tmp_path):
    cfg = write(
        tmp_path,
        "c.ini",
        """
        [experiment]
        kind = exchange-aniso
        t = 0.3
        [exchange]
        jx = 0.4
        jy = 0.9
        jz = 0.2
        """,
    )
    assert main(["exchange-aniso", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CODES["MODEL_VIOLATION"]


def test_seed_override_changes_records(tmp_path):
    cfg = write(tmp_path, "c.ini", SINGLE_Z.replace("mode = exact", "mode = sampled\n    shots = 500"))
    main(["single-qubit", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["single-qubit", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "records.csv").read_bytes() != (tmp_path / "b" / "records.csv").read_bytes()


def test_load_config_hash_ignores_formatting(tmp_path):
    a = load_config(write(tmp_path, "a.ini", RELAX))
    b = load_config(write(tmp_path, "b.ini", RELAX.replace("t1 = 2", "t1=2   ; comment")))
    assert a.config_hash == b.config_hash
