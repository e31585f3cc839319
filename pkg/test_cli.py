"""
Command-line tests: a full synthetic run plus the error contract
(`error=<Code> message=...` on stderr and the matching exit code).
"""
import json
import logging

import pandas as pd
import pytest
from click.testing import CliRunner

from hyperrole import __version__
from hyperrole.main import cli

SMALL_CONFIG = """
seed = 7

[embed]
dim = 8
epochs = 15

[walk]
dim = 8
epochs = 1
walks_per_node = 2

[classifier]
hidden_width = 16
max_epochs = 30
patience = 5
"""


@pytest.fixture(autouse=True)
def reset_package_logger():
    yield
    logger = logging.getLogger("hyperrole")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True


def invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("config") / "small.toml"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def full_run(tmp_path_factory, small_config):
    """Planted fixture generated and run end to end once for the module"""
    root = tmp_path_factory.mktemp("cli")
    result = invoke(
        "--config", small_config, "--out", root, "synth", "roles",
        "--hubs", 3, "--relays", 6, "--traders", 30, "--transfers", 300,
    )
    assert result.exit_code == 0, result.output

    out = root / "run"
    result = invoke(
        "--config", small_config, "--out", out, "run-all",
        root / "synth" / "transactions.csv", root / "synth" / "name_tags.csv",
    )
    assert result.exit_code == 0, result.output
    return out


class TestRunAll:
    """End-to-end run on a planted graph"""

    def test_outputs(self, full_run):
        for name in [
            "embedding.csv", "loss_trace.csv", "refined_embedding.csv", "trust.csv", "edge_lar.csv",
            "hier_features.csv", "walk_embedding.csv", "model.pt", "split.csv", "predictions.csv",
            "metrics.csv", "evaluation.json", "ablation.csv", "profile.json", "run_manifest.json",
        ]:
            assert (full_run / name).exists(), name

    def test_tables(self, full_run):
        predictions = pd.read_csv(full_run / "predictions.csv")
        nodes = pd.read_csv(full_run / "graph" / "nodes.csv")
        assert len(predictions) == len(nodes)

        metrics = pd.read_csv(full_run / "metrics.csv")
        assert metrics["model"].tolist() == ["w/ H, w/ T"]
        assert metrics["feature_dim"].tolist() == [8 + 8 + 11]

        ablation = pd.read_csv(full_run / "ablation.csv")
        assert ablation["model"].tolist() == [
            "majority class", "w/o H, w/o T", "w/ H, w/o T", "w/o H, w/ T", "w/ H, w/ T",
        ]
        assert ablation["feature_dim"].tolist() == [0, 8, 19, 16, 27]

    def test_manifest(self, full_run):
        manifest = json.loads((full_run / "run_manifest.json").read_text())
        assert manifest["version"] == __version__
        assert manifest["config"]["seed"] == 7
        assert manifest["config"]["embed"]["workers"] == 1

    def test_same_seed_gives_identical_files(self, full_run, tmp_path, small_config):
        synth_dir = full_run.parent / "synth"
        again = tmp_path / "again"
        result = invoke(
            "--config", small_config, "--out", again, "run-all",
            synth_dir / "transactions.csv", synth_dir / "name_tags.csv",
        )
        assert result.exit_code == 0, result.output
        for name in ["metrics.csv", "ablation.csv", "embedding.csv", "refined_embedding.csv", "walk_embedding.csv"]:
            assert (again / name).read_bytes() == (full_run / name).read_bytes(), name

    def test_eval_with_mismatched_features(self, full_run, tmp_path, small_config):
        other = tmp_path / "other.toml"
        other.write_text(SMALL_CONFIG.replace("[walk]\ndim = 8", "[walk]\ndim = 4"), encoding="utf-8")
        result = invoke(
            "--config", other, "--out", tmp_path, "features",
            "--graph", full_run / "graph", "--embedding", full_run / "refined_embedding.csv",
        )
        assert result.exit_code == 0, result.output

        result = invoke(
            "--config", small_config, "--out", tmp_path, "classify", "eval",
            "--model", full_run / "model.pt",
            "--graph", full_run / "graph",
            "--labels", full_run / "labels.csv",
            "--embedding", full_run / "refined_embedding.csv",
            "--walk", tmp_path / "walk_embedding.csv",
            "--hier", full_run / "hier_features.csv",
        )
        assert result.exit_code == 3
        assert "error=MisalignedInputs" in result.output

    def test_baseline_keyed_by_address(self, full_run, write_csv, tmp_path, small_config):
        addresses = pd.read_csv(full_run / "graph" / "nodes.csv")["address"]
        rows = "".join(f"{a},0.1,0.2\n" for a in addresses)
        external = write_csv("by_address.csv", "node,dim_0,dim_1\n" + rows)
        result = invoke(
            "--config", small_config, "--out", tmp_path, "classify", "baseline", "node2vec", external,
            "--graph", full_run / "graph", "--labels", full_run / "labels.csv",
        )
        assert result.exit_code == 3
        assert "error=MisalignedInputs" in result.output
        assert "Traceback" not in result.output

    def test_stages_reuse_the_run_directory(self, full_run, small_config):
        result = invoke("--config", small_config, "--out", full_run, "classify", "predict")
        assert result.exit_code == 0, result.output
        assert "predictions" in result.output


class TestErrors:
    """Exit codes and error lines"""

    def test_degenerate_graph(self, write_csv, tmp_path, small_config):
        path = write_csv("tx.csv", "chain,token,tx_id,timestamp,from,to,value,function_name\nE,U,0x1,0,0xa,0xa,1,mint\n")
        result = invoke("--config", small_config, "--out", tmp_path, "embed", "--graph", path)
        assert result.exit_code == 3
        assert "error=DegenerateGraph" in result.output

    def test_unknown_config_key(self, write_csv, tmp_path):
        config = write_csv("bad.toml", "[embed]\nlearning_rte = 0.1\n")
        result = invoke("--config", config, "--out", tmp_path, "synth", "tree")
        assert result.exit_code == 2
        assert "error=ConfigError" in result.output

    def test_missing_config_file(self, tmp_path):
        result = invoke("--config", tmp_path / "nope.toml", "--out", tmp_path, "synth", "tree")
        assert result.exit_code == 2

    def test_bad_thread_count(self, tmp_path):
        result = invoke("--threads", 0, "--out", tmp_path, "synth", "tree")
        assert result.exit_code == 2
        assert "error=ConfigError" in result.output

    def test_invalid_synthetic_spec(self, tmp_path):
        result = invoke("--out", tmp_path, "synth", "roles", "--hubs", 0)
        assert result.exit_code == 2
        assert "error=ConfigError" in result.output

    def test_missing_column(self, write_csv, tmp_path):
        path = write_csv("tx.csv", "ts,src,dst,amount\n1,0xa,0xb,2\n")
        result = invoke("--out", tmp_path, "ingest", path)
        assert result.exit_code == 3
        assert "error=MissingColumn" in result.output


class TestCommands:
    """Individual commands"""

    def test_column_overrides(self, write_csv, tmp_path):
        path = write_csv("tx.csv", "ts,src,dst,amount\n1,0xa,0xb,2\n2,0xb,0xc,3\n")
        result = invoke(
            "--out", tmp_path, "ingest", path,
            "--col-timestamp", "ts", "--col-from", "src", "--col-to", "dst", "--col-value", "amount",
            "--col-chain", "", "--col-token", "", "--col-tx-id", "", "--col-function", "",
        )
        assert result.exit_code == 0, result.output
        nodes = pd.read_csv(tmp_path / "graph" / "nodes.csv")
        assert nodes["address"].tolist() == ["0xa", "0xb", "0xc"]

    def test_check_lemma_on_ideal_tree(self, tmp_path):
        result = invoke("--out", tmp_path, "synth", "check-lemma")
        assert result.exit_code == 0, result.output
        assert "rho=1.0 degenerate=False n_nodes=121" in result.output
        assert json.loads((tmp_path / "lemma.json").read_text())["rho"] == 1.0

    def test_bucket_and_report(self, write_csv, tmp_path):
        path = write_csv("tx.csv", "chain,token,tx_id,timestamp,from,to,value,function_name\n"
                                   "Ethereum,USDY,0x1,1,0xa,0xb,2,swapAndStartBridge\n"
                                   "Ethereum,BUIDL,0x2,2,0xb,0xc,3,mint\n")
        assert invoke("--out", tmp_path, "bucket", path).exit_code == 0
        bucketed = pd.read_csv(tmp_path / "bucketed.csv")
        assert bucketed["bucket"].tolist() == ["bridge", "issuetokens"]

        assert invoke("--out", tmp_path, "report", path, "--token", "usdy").exit_code == 0
        report = pd.read_csv(tmp_path / "function_chain.csv")
        assert sorted(report["bucket"]) == ["bridge", "mint"]

    def test_label(self, write_csv, tmp_path):
        path = write_csv("tags.csv", "address,name\n0xa,MEV Bot\n0xb,alice.eth\n")
        result = invoke("--out", tmp_path, "label", path)
        assert result.exit_code == 0, result.output
        counts = pd.read_csv(tmp_path / "role_counts.csv")
        assert dict(zip(counts["role"], counts["count"])) == {"Trader": 0, "Bot": 1, "Treasury": 0, "Other": 1}

    def test_version(self):
        result = invoke("--version")
        assert result.exit_code == 0
        assert __version__ in result.output
