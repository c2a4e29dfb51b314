"""Exporter contract: format, determinism, pooling, error reporting."""

import json

import numpy as np
import pytest

from sarquant.features import load_embedding_table
from sarquant_embedder import (
    EncoderLoadError,
    ExportError,
    ExportJob,
    HashedNgramEncoder,
    embed_file,
    resolve_encoder,
)
from sarquant_embedder.cli import main


def write_sentences(path, texts, prefix="t"):
    lines = [
        json.dumps({"id": f"{prefix}{i}", "text": text, "category": "politics"})
        for i, text in enumerate(texts)
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestHashedEncoder:
    def test_token_rows(self):
        encoder = HashedNgramEncoder(16)
        rows = encoder.encode_tokens("hello world")
        assert rows.shape == (2, 16)
        np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 1.0)

    def test_empty_text_gives_zero_row(self):
        encoder = HashedNgramEncoder(8)
        rows = encoder.encode_tokens("   ")
        assert rows.shape == (1, 8)
        assert not rows.any()

    def test_deterministic(self):
        encoder = HashedNgramEncoder(32)
        a = encoder.encode_tokens("short words here")
        b = encoder.encode_tokens("short words here")
        np.testing.assert_array_equal(a, b)


class TestResolveEncoder:
    def test_hashed(self):
        encoder = resolve_encoder("hashed:24")
        assert encoder.dim == 24

    @pytest.mark.parametrize("bad", ["hashed", "hashed:x", "magic:3", "hf:"])
    def test_bad_ids(self, bad):
        with pytest.raises(EncoderLoadError):
            resolve_encoder(bad)


class TestEmbedFile:
    def test_three_sentences(self, tmp_path):
        infile = tmp_path / "in.jsonl"
        outfile = tmp_path / "out.tsv"
        write_sentences(infile, ["first sentence", "second one", "third line"])
        job = ExportJob(str(infile), str(outfile), encoder="hashed:16")
        assert embed_file(job) == 3
        lines = outfile.read_text().splitlines()
        assert lines[0] == "dim\t16"
        assert len(lines) == 4

    def test_loads_through_feature_pipeline(self, tmp_path):
        infile = tmp_path / "in.jsonl"
        outfile = tmp_path / "out.tsv"
        write_sentences(infile, ["alpha beta", "gamma delta epsilon"])
        embed_file(ExportJob(str(infile), str(outfile), encoder="hashed:12"))
        table = load_embedding_table(outfile)
        assert table.dim == 12
        assert set(table.vectors) == {"t0", "t1"}
        for vector in table.vectors.values():
            assert np.all(np.isfinite(vector))

    def test_two_runs_identical(self, tmp_path):
        infile = tmp_path / "in.jsonl"
        write_sentences(infile, ["same input", "every time"])
        out_a = tmp_path / "a.tsv"
        out_b = tmp_path / "b.tsv"
        embed_file(ExportJob(str(infile), str(out_a), encoder="hashed:32"))
        embed_file(ExportJob(str(infile), str(out_b), encoder="hashed:32"))
        assert out_a.read_bytes() == out_b.read_bytes()
        assert (tmp_path / "a.tsv.meta").read_text() == (
            (tmp_path / "b.tsv.meta").read_text()
        )

    def test_row_order_matches_input(self, tmp_path):
        infile = tmp_path / "in.jsonl"
        outfile = tmp_path / "out.tsv"
        write_sentences(infile, [f"text {i}" for i in range(10)])
        embed_file(ExportJob(str(infile), str(outfile), encoder="hashed:8"))
        ids = [line.split("\t")[0] for line in outfile.read_text().splitlines()[1:]]
        assert ids == [f"t{i}" for i in range(10)]

    def test_pooling_modes(self, tmp_path):
        infile = tmp_path / "in.jsonl"
        write_sentences(infile, ["two tokens"])
        mean_out = tmp_path / "mean.tsv"
        first_out = tmp_path / "first.tsv"
        embed_file(ExportJob(str(infile), str(mean_out), encoder="hashed:16", pooling="mean"))
        embed_file(
            ExportJob(str(infile), str(first_out), encoder="hashed:16", pooling="first-token")
        )
        rows = HashedNgramEncoder(16).encode_tokens("two tokens")
        mean_table = load_embedding_table(mean_out)
        first_table = load_embedding_table(first_out)
        np.testing.assert_allclose(mean_table.vectors["t0"], rows.mean(axis=0))
        np.testing.assert_allclose(first_table.vectors["t0"], rows[0])

    def test_missing_text_field(self, tmp_path):
        infile = tmp_path / "in.jsonl"
        infile.write_text(json.dumps({"id": "t0", "category": "x"}) + "\n")
        with pytest.raises(ExportError, match="missing text field"):
            embed_file(ExportJob(str(infile), str(tmp_path / "out.tsv")))

    def test_id_collision(self, tmp_path):
        infile = tmp_path / "in.jsonl"
        line = json.dumps({"id": "dup", "text": "x"})
        infile.write_text(line + "\n" + line + "\n")
        with pytest.raises(ExportError, match="id collision"):
            embed_file(ExportJob(str(infile), str(tmp_path / "out.tsv")))

    def test_votes_schema_accepted(self, tmp_path):
        infile = tmp_path / "votes.jsonl"
        infile.write_text(
            json.dumps(
                {"id": "v1", "text": "tweet", "category": "sports", "votes": [1, 0, 1]}
            )
            + "\n"
        )
        outfile = tmp_path / "out.tsv"
        assert embed_file(ExportJob(str(infile), str(outfile), encoder="hashed:8")) == 1

    def test_sidecar_metadata(self, tmp_path):
        infile = tmp_path / "in.jsonl"
        outfile = tmp_path / "out.tsv"
        write_sentences(infile, ["hello"])
        embed_file(ExportJob(str(infile), str(outfile), encoder="hashed:8", pooling="mean"))
        meta = (tmp_path / "out.tsv.meta").read_text().splitlines()
        assert all(line.startswith("#") for line in meta)
        assert "# encoder=hashed:8" in meta
        assert "# pooling=mean" in meta


class TestCli:
    def test_cli_round_trip(self, tmp_path, capsys):
        infile = tmp_path / "in.jsonl"
        outfile = tmp_path / "out.tsv"
        write_sentences(infile, ["one", "two"])
        code = main(["--in", str(infile), "--out", str(outfile), "--encoder", "hashed:8"])
        assert code == 0
        assert "wrote 2 embeddings" in capsys.readouterr().out
        assert load_embedding_table(outfile).dim == 8

    def test_cli_error_exit_code(self, tmp_path, capsys):
        code = main(["--in", str(tmp_path / "missing.jsonl"),
                     "--out", str(tmp_path / "out.tsv")])
        assert code == 2
        assert "error" in capsys.readouterr().err


def test_acceptance_embedder_contract(tmp_path):
    """Exporter output loads via load_embedding_table, same dim, deterministic."""
    infile = tmp_path / "in.jsonl"
    write_sentences(infile, ["alpha beta gamma", "delta", "epsilon zeta"])
    out_a = tmp_path / "a.tsv"
    out_b = tmp_path / "b.tsv"
    embed_file(ExportJob(str(infile), str(out_a), encoder="hashed:48"))
    embed_file(ExportJob(str(infile), str(out_b), encoder="hashed:48"))

    table = load_embedding_table(out_a)
    assert table.dim == 48
    assert len(table) == 3
    lengths = {vector.shape for vector in table.vectors.values()}
    assert lengths == {(48,)}
    assert out_a.read_bytes() == out_b.read_bytes()
    print("[acceptance] embedder contract: PASS")
