import io
import re

import pytest

from kwmatch.checkpoint import save_checkpoint
from kwmatch.cli import main
from kwmatch.config import TrainingConfig
from kwmatch.training import train

from support import CORPUS, D1, D2, Q, records, toy_model

TOY = ["--set", "embedding_dim=8", "--set", "idf_embedding_dim=4", "--set", "pos_embedding_dim=4",
       "--set", "stopword_embedding_dim=2", "--set", "embnn_widths=8,8", "--set", "efnn_widths=8,8",
       "--set", "jinn_widths=8,1", "--set", "mlp_view_width=8", "--set", "att_heads=2",
       "--set", "ffn_width=16", "--set", "top_widths=16,8", "--set", "bucket_count=10"]


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def ckpt(tmp_path_factory):
    model = toy_model()
    data = records((Q, D1, 1), (Q, D2, 0), (D1, CORPUS[3], 1), (CORPUS[4], CORPUS[5], 1), (Q, CORPUS[4], 0))
    train(model, TrainingConfig(batch_size=5, epochs=5), data)
    path = tmp_path_factory.mktemp("ck") / "toy.fgqr"
    save_checkpoint(model, path)
    return str(path)


def test_rank_sorted_with_stable_ties(ckpt, tmp_path):
    cands = tmp_path / "c.txt"
    # the second and fourth lines tokenize identically, so their scores tie
    cands.write_text(f"{D1}\n{D2}\nwhat is the capital of france\n{D2.replace(' ', '  ')}\n", encoding="utf-8")
    code, out = run("rank", "--model", ckpt, "--query", Q, "--candidates", str(cands))
    assert code == 0
    rows = [line.split("\t") for line in out.splitlines()]
    assert len(rows) == 4
    scores = [float(s) for s, _ in rows]
    assert scores == sorted(scores, reverse=True)
    names = [c for _, c in rows]
    assert sorted(names) == sorted(cands.read_text(encoding="utf-8").splitlines())
    assert names.index(D2) + 1 == names.index(D2.replace(" ", "  "))


def test_eval_single_class(ckpt, tmp_path):
    data = tmp_path / "d.tsv"
    data.write_text(f"{Q}\t{D1}\t1\n{Q}\t{D2}\t1\n", encoding="utf-8")
    code, out = run("eval", "--model", ckpt, "--data", str(data))
    assert code == 0
    assert re.search(r"^accuracy=\d\.\d+$", out, re.M)
    assert "auc=n/a" in out.splitlines()
    assert "Acc.(%)" in out


def test_eval_quiet_only_key_values(ckpt, tmp_path):
    data = tmp_path / "d.tsv"
    data.write_text(f"{Q}\t{D1}\t1\n{Q}\t{CORPUS[4]}\t0\n", encoding="utf-8")
    code, out = run("--quiet", "eval", "--model", ckpt, "--data", str(data))
    assert code == 0
    assert all("=" in line for line in out.splitlines())


def test_explain_worked_example(ckpt):
    code, out = run("explain", "--model", ckpt, Q, D1)
    assert code == 0
    assert "q chain (7 levels):" in out and "d chain (5 levels):" in out
    assert "comparable pairs (7):" in out
    pair_rows = out.split("comparable pairs (7):")[1].strip().splitlines()[1:]
    assert [tuple(r.split("\t")[:2]) for r in (row.strip() for row in pair_rows)] == \
        [("1", "1"), ("2", "1"), ("3", "2"), ("4", "3"), ("5", "3"), ("6", "4"), ("7", "5")]


def test_unknown_subcommand():
    assert run("frobnicate")[0] == 1


def test_missing_arguments():
    assert run("rank", "--model", "x")[0] == 1


def test_bad_config_key(tmp_path):
    code, _ = run("gen-data", "--out", str(tmp_path / "x.tsv"), "--set", "no_such_key=1")
    assert code == 0  # gen-data ignores model config
    code, _ = run("train", "--train", str(tmp_path / "x.tsv"), "--out", str(tmp_path / "m"),
                  "--set", "no_such_key=1")
    assert code == 1


def test_data_errors(tmp_path, ckpt):
    assert run("eval", "--model", str(tmp_path / "none"), "--data", "x")[0] == 2
    bad = tmp_path / "bad.tsv"
    bad.write_text("only\ttwo\n", encoding="utf-8")
    assert run("eval", "--model", ckpt, "--data", str(bad))[0] == 2


def test_checkpoint_config_mismatch(ckpt, tmp_path):
    data = tmp_path / "d.tsv"
    data.write_text(f"{Q}\t{D1}\t1\n", encoding="utf-8")
    code, _ = run("eval", "--model", ckpt, "--data", str(data), "--set", "embedding_dim=16")
    assert code == 2


def test_end_to_end_deterministic(tmp_path):
    outputs = []
    for run_id in ("a", "b"):
        d = tmp_path / run_id
        d.mkdir()
        steps = [
            ("--seed", "5", "gen-data", "--n-pairs", "60", "--out", str(d / "train.tsv"),
             "--aliases-out", str(d / "al.tsv")),
            ("--seed", "6", "gen-data", "--n-pairs", "20", "--out", str(d / "dev.tsv")),
            ("--seed", "1", "train", "--train", str(d / "train.tsv"), "--dev", str(d / "dev.tsv"),
             "--aliases", str(d / "al.tsv"), "--out", str(d / "m.fgqr"), "--epochs", "2",
             "--history", str(d / "hist.txt"), *TOY),
            ("eval", "--model", str(d / "m.fgqr"), "--data", str(d / "dev.tsv")),
        ]
        text = []
        for argv in steps:
            code, out = run(*argv)
            assert code == 0, argv
            text.append(out)
        outputs.append((text, [(d / f).read_bytes() for f in ("train.tsv", "dev.tsv", "m.fgqr", "hist.txt")]))
    assert outputs[0] == outputs[1]
    assert "epoch=2" in outputs[0][0][2] and "best_epoch=" in outputs[0][0][2]
