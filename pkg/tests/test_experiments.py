import json
import warnings

import numpy as np
import pydantic
import pytest
import torch

from semcomm.baselines import channel_encode, conv_encode, modulate, source_encode
from semcomm.data import gen_translation, gen_vqa
from semcomm.experiments import (
    COLUMNS,
    ConfigHashWarning,
    ExperimentConfig,
    MissingCheckpoint,
    account_ops,
    account_symbols,
    build_model,
    dense_ops,
    desk_config,
    format_table,
    load_checkpoint,
    load_model,
    read_records,
    run_sweep,
    run_user_sweep,
    run_wiring_ablation,
    save_checkpoint,
    save_model,
    summarize,
    train_and_save,
    viterbi_ops,
)
from semcomm.experiments.accounting import baseline_symbols, conv_encoder_ops, image_payload_bits
from semcomm.experiments.checkpoint import CheckpointError
from semcomm.experiments.cli import main
from semcomm.experiments.runner import symbols_per_sample
from semcomm.transceivers import IRConfig, MTConfig, MTTransceiver, VQAConfig


def tiny_ir(out_dir, **kw):
    base = dict(
        task="ir",
        model=dict(image_size=16, patch_size=8, d_model=16, heads=2, d_ff=32, layers=1, dropout=0.0, L_C=4,
                   jsc_hidden=[12]),
        dataset=dict(num_classes=4, per_class=6, image_size=16, seed=0),
        train=dict(semantic=dict(batch_size=8, epochs=1), jsc=dict(batch_size=8, epochs=1)),
        snr_db=[-6, -3, 0, 3, 6, 9, 18],
        seeds=[0, 1, 2],
        users=[1, 2, 4],
        out_dir=str(out_dir),
    )
    base.update(kw)
    return ExperimentConfig.model_validate(base)


class TestConfig:
    def test_extra_key_rejected(self):
        with pytest.raises(pydantic.ValidationError):
            ExperimentConfig.model_validate({"task": "ir", "colour": 1})
        with pytest.raises(pydantic.ValidationError):
            ExperimentConfig.model_validate({"task": "ir", "channel": {"model": "rician", "N": 3}})

    def test_unknown_model_and_dataset_keys(self):
        with pytest.raises(pydantic.ValidationError):
            ExperimentConfig.model_validate({"task": "ir", "model": {"vocab": 3}})
        with pytest.raises(pydantic.ValidationError):
            ExperimentConfig.model_validate({"task": "mt", "dataset": {"num_classes": 3}})
        with pytest.raises(pydantic.ValidationError):
            ExperimentConfig.model_validate({"task": "ir", "train": {"whole": {}}})

    def test_inconsistent_channel_rejected(self):
        with pytest.raises(pydantic.ValidationError):
            ExperimentConfig.model_validate({"task": "ir", "channel": {"model": "awgn", "M": 4, "K": 2}})
        with pytest.raises(pydantic.ValidationError):
            ExperimentConfig.model_validate({"task": "ir", "csi": [-0.1]})

    def test_round_trip_and_hash(self, tmp_path):
        cfg = desk_config("mt", out_dir=str(tmp_path))
        back = ExperimentConfig.load(cfg.dump(tmp_path / "c.json"))
        assert back == cfg and back.training_hash() == cfg.training_hash()
        # evaluation-only fields do not change the training hash
        assert cfg.model_copy(update={"snr_db": [0.0]}).training_hash() == cfg.training_hash()
        other = desk_config("mt", model={"L_C": 8})
        assert other.training_hash() != cfg.training_hash()

    @pytest.mark.parametrize("task", ["ir", "mt", "vqa"])
    def test_desk_configs_build(self, task):
        cfg = desk_config(task)
        assert build_model(cfg) is not None
        assert set(cfg.train) == ({"semantic", "jsc"} if task == "ir" else {"semantic", "jsc", "whole"})


class TestCheckpoint:
    def test_bit_identical_round_trip(self, tmp_path):
        g = torch.Generator().manual_seed(0)
        tensors = {
            "a": torch.randn(3, 4, generator=g),
            "b": torch.randn(2, dtype=torch.float64, generator=g),
            "c": torch.randn(2, 2, dtype=torch.complex64, generator=g),
            "d": torch.arange(5),
            "e": torch.tensor([True, False]),
            "scalar": torch.tensor(3.5),
            "empty": torch.zeros(0, 3),
        }
        save_checkpoint(tmp_path / "x.ckpt", tensors, "abc", {"note": 1})
        back, header = load_checkpoint(tmp_path / "x.ckpt", "abc")
        assert list(back) == list(tensors)
        for k in tensors:
            assert back[k].dtype == tensors[k].dtype and back[k].shape == tensors[k].shape
            assert back[k].numpy().tobytes() == tensors[k].numpy().tobytes()
        assert header["provenance"] == {"note": 1}

    def test_model_round_trip_keeps_phases(self, tmp_path):
        torch.manual_seed(0)
        m = MTTransceiver(MTConfig(src_vocab=9, tgt_vocab=9, max_len=4, d_model=16, heads=2, d_ff=16, enc_layers=1,
                                   dec_layers=1, L_C=4, jsc_hidden=[8]))
        m.trained_phases = ["semantic", "jsc"]
        save_model(tmp_path / "m.ckpt", m, "h1")
        torch.manual_seed(1)
        m2 = MTTransceiver(m.cfg)
        load_model(tmp_path / "m.ckpt", m2, "h1")
        for (k, a), (_, b) in zip(m.state_dict().items(), m2.state_dict().items()):
            assert torch.equal(a, b), k
        assert m2.trained_phases == ["semantic", "jsc"]

    def test_hash_mismatch_warns(self, tmp_path):
        save_checkpoint(tmp_path / "x.ckpt", {"a": torch.ones(1)}, "abc")
        with pytest.warns(ConfigHashWarning):
            load_checkpoint(tmp_path / "x.ckpt", "xyz")
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            load_checkpoint(tmp_path / "x.ckpt", "abc")

    def test_errors(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "missing.ckpt")
        (tmp_path / "junk.ckpt").write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "junk.ckpt")
        save_checkpoint(tmp_path / "t.ckpt", {"a": torch.ones(100)}, "h")
        data = (tmp_path / "t.ckpt").read_bytes()
        (tmp_path / "t.ckpt").write_bytes(data[:-8])
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "t.ckpt")


class TestAccounting:
    def test_dense_layer_hand_count(self):
        assert dense_ops(2, 3) == (6, 6)

    def test_ir_paper_parity(self):
        cfg = IRConfig(image_size=224, patch_size=16, d_model=384, L_C=128)
        assert account_symbols("ir", cfg)["rows"][0]["semantic"] == 128

    def test_vqa_paper_parity(self):
        cfg = VQAConfig(image_size=224, patch_size=16, d_img=384, L_C_img=128)
        assert account_symbols("vqa", cfg)["rows"][0]["semantic"] == 25216

    def test_desk_vqa_image(self):
        cfg = VQAConfig(image_size=32, patch_size=8, L_C_img=32)
        assert cfg.image_tokens == 17
        assert account_symbols("vqa", cfg)["rows"][0]["semantic"] == 544

    def test_baseline_symbols_match_pipeline(self):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        for scheme in ("bpsk", "qpsk", "8qam"):
            frame = channel_encode(source_encode(img, "image_raw"))
            sym, _ = modulate(frame.bits, scheme)
            assert baseline_symbols(image_payload_bits(8, 8, 3), scheme) == sym.size

    def test_viterbi_ops_linear(self):
        m1, a1 = viterbi_ops(1000 - 6)
        m2, a2 = viterbi_ops(2000 - 6)
        assert (m2, a2) == (2 * m1, 2 * a1)

    def test_conv_encoder_ops_match_xor_count(self):
        # one XOR per tap beyond the first, per generator and step
        taps = sum(bin(g).count("1") for g in (0o133, 0o171, 0o165))
        assert conv_encoder_ops(10) == (0, 16 * (taps - 3))
        assert conv_encode(np.zeros(10)).size == 3 * 16

    def test_ops_table_layout(self):
        rep = account_ops("ir", IRConfig())
        assert [(r["method"], r["part"]) for r in rep["rows"]] == [
            ("semantic JSC", "encoder"), ("semantic JSC", "decoder"),
            ("conv+Viterbi", "encoder"), ("conv+Viterbi", "decoder")]
        # 128 -> 256 -> 64 encoder
        assert rep["rows"][0]["multiplications"] == 128 * 256 + 256 * 64
        assert "multiplications" in format_table(rep)

    def test_mt_symbols_match_simulator(self):
        corpus = gen_translation(50, 6, seed=0)
        cfg = MTConfig(src_vocab=27, tgt_vocab=27, max_len=6, d_model=16, heads=2, d_ff=16, enc_layers=1,
                       dec_layers=1, L_C=4, jsc_hidden=[8])
        m = MTTransceiver(cfg).eval()
        src, _ = corpus.split("test")
        s = m.pad_source(src)
        with torch.no_grad():
            z, mask = m.semantic_encode(s)
            x = m.jsc_encode(z) * mask.unsqueeze(-1)
        emitted = float((x != 0).sum()) / len(src)
        mean_tokens = float(np.mean([len(t) for t in src]))
        assert symbols_per_sample("mt", m, corpus) == pytest.approx(emitted, abs=1e-9)
        assert account_symbols("mt", cfg, mean_tokens=mean_tokens)["rows"][0]["semantic"] == pytest.approx(emitted)

    def test_vqa_symbols_match_simulator(self):
        ds = gen_vqa(30, 2, seed=0)
        cfg = desk_config("vqa").model_config_obj()
        m = build_model(desk_config("vqa"), ds)
        te = ds.test_idx
        mean_tokens = float((ds.questions[te] != 0).sum(1).mean())
        rows = account_symbols("vqa", cfg, mean_tokens=mean_tokens)["rows"]
        assert symbols_per_sample("vqa", m, ds) == pytest.approx(rows[0]["semantic"] + rows[1]["semantic"])


@pytest.fixture(scope="module")
def trained_ir(tmp_path_factory):
    out = tmp_path_factory.mktemp("ir")
    cfg = tiny_ir(out, eval_limit=12)
    for seed in cfg.seeds:
        train_and_save(cfg, seed)
    return cfg


class TestSweeps:
    def test_sweep_row_count_and_schema(self, trained_ir):
        records = run_sweep(trained_ir)
        assert len(records) == 7 * 3 * 2
        out = trained_ir.out_dir
        with open(f"{out}/sweep_snr.csv") as f:
            assert f.readline().strip() == ",".join(COLUMNS)
        assert len(read_records(f"{out}/sweep_snr.csv")) == 42
        assert json.loads(open(f"{out}/config.json").read())["task"] == "ir"
        assert {r.csi for r in records} == {"perfect", "imperfect"}

    def test_sweep_is_byte_identical(self, trained_ir, tmp_path):
        run_sweep(trained_ir)
        first = open(f"{trained_ir.out_dir}/sweep_snr.csv", "rb").read()
        run_sweep(trained_ir)
        assert open(f"{trained_ir.out_dir}/sweep_snr.csv", "rb").read() == first

    def test_user_sweep(self, trained_ir):
        records = run_user_sweep(trained_ir.model_copy(update={"csi": [0.0, 0.025]}))
        assert sorted({r.users for r in records}) == [1, 2, 4]
        assert len(records) == 3 * 3 * 2
        stats = summarize(records)
        assert all(v["n"] == 3 for v in stats.values())

    def test_user_sweep_rejects_too_many_users(self, trained_ir):
        with pytest.raises(ValueError):
            run_user_sweep(trained_ir.model_copy(update={"users": [5]}))

    def test_baseline_rows(self, trained_ir):
        cfg = ExperimentConfig.model_validate({**trained_ir.model_dump(), "snr_db": [18.0], "seeds": [0],
                                               "eval_limit": 4, "baseline": {"enabled": True}})
        records = run_sweep(cfg)
        assert {r.metric for r in records} == {"recall@1", "baseline_recall@1"}

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(MissingCheckpoint):
            run_sweep(tiny_ir(tmp_path))

    def test_wall_time_only_when_requested(self, trained_ir):
        records = run_sweep(trained_ir.model_copy(update={"snr_db": [0.0], "seeds": [0]}))
        assert all(r.wall_s == 0.0 for r in records)


class TestCli:
    def test_missing_config_exits_1(self, tmp_path, capsys):
        assert main(["train", "--config", str(tmp_path / "missing.json")]) == 1
        assert "not found" in capsys.readouterr().err

    def test_unknown_subcommand_exits_1(self):
        assert main(["bogus"]) == 1

    def test_invalid_config_exits_1(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"task": "ir", "extra": 1}))
        assert main(["account", "--config", str(p)]) == 1
        p.write_text("{not json")
        assert main(["account", "--config", str(p)]) == 1

    def test_runtime_failure_exits_2(self, tmp_path):
        cfg = tiny_ir(tmp_path / "run")
        p = cfg.dump(tmp_path / "c.json")
        assert main(["sweep-snr", "--config", str(p)]) == 2

    def test_attention_dump_requires_vqa(self, tmp_path):
        p = tiny_ir(tmp_path / "run").dump(tmp_path / "c.json")
        assert main(["attention-dump", "--config", str(p)]) == 1

    def test_full_ir_flow(self, tmp_path):
        cfg = tiny_ir(tmp_path / "run", seeds=[0], snr_db=[0.0, 18.0], eval_limit=8)
        p = cfg.dump(tmp_path / "c.json")
        for cmd in (["gen-data"], ["train"], ["eval", "--snr", "6"], ["sweep-snr"], ["account"]):
            assert main([*cmd, "--config", str(p)]) == 0, cmd
        run = tmp_path / "run"
        assert (run / "data" / "manifest.json").exists()
        assert (run / "checkpoints" / "ir-seed0.ckpt").exists()
        assert len(read_records(run / "sweep_snr.csv")) == 4
        assert json.loads((run / "eval.json").read_text())[0]["snr_db"] == 6.0
        assert (run / "logs" / "ir-seed0.jsonl").read_text().count("\n") > 0

    def test_attention_dump_writes_per_layer_maps(self, tmp_path):
        cfg = ExperimentConfig.model_validate(dict(
            task="vqa",
            model=dict(image_size=24, patch_size=8, d_img=12, img_layers=1, vocab=21, max_question_len=6,
                       d_model=16, txt_layers=1, heads=2, d_ff=16, fusion_layers=2, fusion_hidden=16,
                       num_answers=15, dropout=0.0, L_C_img=3, L_C_txt=4, jsc_hidden=[8]),
            dataset=dict(num_scenes=12, questions_per_scene=2, seed=0),
            train=dict(semantic=dict(batch_size=8, epochs=1), jsc=dict(batch_size=8, epochs=1),
                       whole=dict(batch_size=8, epochs=1)),
            seeds=[0], out_dir=str(tmp_path / "run")))
        p = cfg.dump(tmp_path / "c.json")
        assert main(["train", "--config", str(p)]) == 0
        assert main(["attention-dump", "--config", str(p), "--samples", "3"]) == 0
        arr = np.load(tmp_path / "run" / "attention-seed0.npz")
        assert {"layer0", "layer1", "questions", "answers"} <= set(arr.files)
        assert arr["layer0"].shape == (3, 2, 10, 7)


def test_wiring_ablation_records_both_accuracies(tmp_path):
    cfg = ExperimentConfig.model_validate(dict(
        task="vqa",
        model=dict(image_size=24, patch_size=8, d_img=12, img_layers=1, vocab=21, max_question_len=6, d_model=16,
                   txt_layers=2, heads=2, d_ff=24, fusion_layers=2, fusion_hidden=16, num_answers=15, dropout=0.0,
                   L_C_img=3, L_C_txt=4, jsc_hidden=[8]),
        dataset=dict(num_scenes=20, questions_per_scene=2, seed=0),
        train=dict(semantic=dict(batch_size=16, epochs=1), jsc=dict(batch_size=16, epochs=1),
                   whole=dict(batch_size=16, epochs=1)),
        out_dir=str(tmp_path),
    ))
    res = run_wiring_ablation(cfg, seed=0, snr_db=12.0)
    for k in ("layerwise", "classic", "layerwise_channel_free", "classic_channel_free"):
        assert 0.0 <= res[k] <= 1.0
    assert json.loads((tmp_path / "ablation-seed0.json").read_text()) == res
    assert run_wiring_ablation(cfg, 0, 12.0) == res
    with pytest.raises(ValueError):
        run_wiring_ablation(tiny_ir(tmp_path), 0, 12.0)
