import numpy as np
import pytest

from kwmatch.embeddings import (
    HashEmbeddings,
    TrainableEmbeddings,
    load_aliases,
    load_embedding_file,
    save_embedding_file,
)
from kwmatch.errors import DimensionMismatch, EmptyQuestion, ParseError


def test_hash_deterministic_unit_norm():
    p = HashEmbeddings(64, seed=3)
    a = p.embed_keyword("phone")
    b = HashEmbeddings(64, seed=3).embed_keyword("phone")
    assert np.array_equal(a, b)
    assert abs(np.linalg.norm(p.vector("cool")) - 1.0) < 1e-6
    assert not np.allclose(HashEmbeddings(64, seed=4).vector("phone"), p.vector("phone"))


def test_hash_near_orthogonal():
    p = HashEmbeddings(64)
    rng = np.random.default_rng(0)
    cos = []
    for _ in range(1000):
        a, b = (f"tok{int(x)}" for x in rng.integers(0, 10**6, size=2))
        cos.append(abs(float(p.vector(a) @ p.vector(b))))
    assert np.mean(cos) < 0.2


def test_hash_aliases_share_vectors():
    p = HashEmbeddings(16, aliases={"iphone": "phone"})
    assert np.array_equal(p.vector("iphone"), p.vector("phone"))


def test_question_vector():
    p = HashEmbeddings(8, dtype=np.float64)
    va = p.vector("a")
    vb = p.vector("b")
    assert np.allclose(p.embed_question(["a"]), np.tanh(va))
    assert np.allclose(p.embed_question(["a", "a"]), p.embed_question(["a"]))
    assert np.allclose(p.embed_question(["a", "b"]), np.tanh((va + vb) / 2), atol=1e-12)
    with pytest.raises(EmptyQuestion):
        p.embed_question([])


def test_projection_frozen_unless_training():
    assert not HashEmbeddings(4).params["proj.W"].requires_grad
    assert HashEmbeddings(4, train=True).params["proj.W"].requires_grad


def test_file_mode(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("3 3\nphone 0.5 -1.25 2\n手 1 2 3\n机 3 4 5\n", encoding="utf-8")
    p = load_embedding_file(path, dtype=np.float64)
    assert p.dim == 3
    assert np.array_equal(p.embed_keyword("phone"), [0.5, -1.25, 2.0])
    assert np.array_equal(p.embed_keyword("手机"), [2.0, 3.0, 4.0])  # mean of the two characters
    assert np.array_equal(p.embed_keyword("x"), [0.0, 0.0, 0.0])
    assert np.array_equal(p.embed_keyword("手z"), [0.5, 1.0, 1.5])  # unknown character counts as zero


def test_minimal_file(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2 3\na 1 2 3\nb 4 5 6\n", encoding="utf-8")
    assert load_embedding_file(path).dim == 3


def test_file_dimension_mismatch(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2 3\na 1 2 3\nb 4 5\n", encoding="utf-8")
    with pytest.raises(DimensionMismatch):
        load_embedding_file(path)


def test_file_parse_error_has_line(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2 3\na 1 2 3\nb 4 x 6\n", encoding="utf-8")
    with pytest.raises(ParseError) as err:
        load_embedding_file(path)
    assert err.value.line == 3


def test_missing_file_names_path(tmp_path):
    with pytest.raises(OSError) as err:
        load_embedding_file(tmp_path / "nope.txt")
    assert "nope.txt" in str(err.value)


def test_file_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    vecs = {f"w{i}": rng.standard_normal(5) for i in range(20)}
    path = tmp_path / "emb.txt"
    save_embedding_file(path, vecs)
    back = load_embedding_file(path)
    for k, v in vecs.items():
        assert np.array_equal(back.vectors[k], v)


def test_trainable_unk_row():
    p = TrainableEmbeddings(["a", "b"], 4, init="normal", seed=0)
    assert p.vocab[0] == "<unk>"
    assert np.array_equal(p.embed_keyword("zzz"), p.embed_keyword("<unk>"))
    assert p.params["table"].shape == (3, 4)
    assert p.embed_keyword("a").shape == (4,)


def test_trainable_hash_init_matches_hash_vectors():
    p = TrainableEmbeddings(["a", "b"], 8, init="hash", seed=2, aliases={"b": "a"}, dtype=np.float64)
    h = HashEmbeddings(8, seed=2, dtype=np.float64)
    assert np.allclose(p.vector("a"), h.vector("a"))
    assert np.array_equal(p.vector("a"), p.vector("b"))


def test_aliases_file(tmp_path):
    path = tmp_path / "al.tsv"
    path.write_text("# synonyms\niphone\tphone\n", encoding="utf-8")
    assert load_aliases(path) == {"iphone": "phone"}
    path.write_text("bad line\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_aliases(path)
