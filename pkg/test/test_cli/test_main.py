"""命令行测试"""

import json
from pathlib import Path

import pytest
import yaml

from src.data.io import (MANIFEST_NAME, save_events, task_filename,
                         write_manifest, write_task_file)
from src.evaluation.report import MATRIX_CSV, REPORT_MD
from src.main import (build_train_config, load_settings, main, parse_args,
                      resolve_seed)

FAST_CONFIG = {
    "log_level": "WARNING",
    "jobs": 1,
    "seed": 42,
    "epochs": 1,
    "hidden_size": 4,
    "batch_size": 4,
    "rollout_chunk": 10,
    "importance_cap": 16,
    "learning_rate": 0.01,
}


@pytest.fixture
def config_file(tmp_path) -> Path:
    """训练很快的配置文件"""
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(FAST_CONFIG), encoding="utf-8")
    return path


@pytest.fixture
def tasks_dir(tmp_path, task_sets) -> Path:
    """split 输出目录"""
    root = tmp_path / "tasks"
    for task in task_sets:
        write_task_file(task, root / task_filename(task.task_id))
    write_manifest({"boundaries": {"p33_3": 8.0, "p66_7": 12.0}}, root)
    return root


class TestArguments:
    """参数与配置解析测试类"""

    def test_invalid_count(self, tmp_path):
        """测试 --count 0 为用法错误"""
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--count", "0", "--out", str(tmp_path / "e.jsonl")])
        assert exc.value.code == 2

    def test_unknown_method(self, tmp_path):
        """测试未知方法为用法错误"""
        with pytest.raises(SystemExit) as exc:
            main(["train", "--tasks-dir", "t", "--method", "sgd", "--out-dir", str(tmp_path)])
        assert exc.value.code == 2

    def test_seed_precedence(self, config_file, monkeypatch):
        """测试 --seed 优先于环境变量，环境变量优先于配置文件"""
        monkeypatch.delenv("DRIFTFOLLOW_SEED", raising=False)
        argv = ["generate", "--out", "e.jsonl", "--config", str(config_file)]
        args = parse_args(argv)
        assert resolve_seed(args, load_settings(args)) == 42

        monkeypatch.setenv("DRIFTFOLLOW_SEED", "11")
        assert resolve_seed(args, load_settings(args)) == 11

        args = parse_args(argv + ["--seed", "5"])
        assert resolve_seed(args, load_settings(args)) == 5

    def test_train_overrides(self, config_file, monkeypatch):
        """测试命令行覆盖配置文件中的训练键"""
        monkeypatch.delenv("DRIFTFOLLOW_SEED", raising=False)
        args = parse_args(
            ["train", "--tasks-dir", "t", "--out-dir", "o", "--config", str(config_file),
             "--method", "mas", "--epochs", "3"]
        )
        cfg = build_train_config(args, load_settings(args))
        assert cfg.epochs == 3
        assert cfg.hidden_size == 4
        assert cfg.method.value == "mas"
        assert cfg.reg.reg_lambda == 100_000.0

    def test_missing_config(self, tmp_path):
        """测试指定的配置文件不存在"""
        code = main(["generate", "--out", str(tmp_path / "e.jsonl"), "--config", str(tmp_path / "none.yaml")])
        assert code == 2

    def test_invalid_config_value(self, tmp_path, tasks_dir):
        """测试配置值非法"""
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump({**FAST_CONFIG, "epochs": 0}), encoding="utf-8")
        code = main(["train", "--tasks-dir", str(tasks_dir), "--out-dir", str(tmp_path / "o"), "--config", str(path)])
        assert code == 2


class TestCommands:
    """子命令测试类"""

    def test_generate_and_split(self, tmp_path, config_file):
        """测试生成后划分"""
        events = tmp_path / "events.jsonl"
        assert main(["generate", "--count", "12", "--seed", "7", "--out", str(events), "--config", str(config_file)]) == 0
        assert len(events.read_text(encoding="utf-8").splitlines()) == 12
        assert (tmp_path / "events.jsonl.manifest.json").exists()

        out = tmp_path / "tasks"
        assert main(["split", "--in", str(events), "--out-dir", str(out), "--config", str(config_file)]) == 0
        for task_id in (1, 2, 3):
            assert (out / task_filename(task_id)).exists()
        manifest = json.loads((out / MANIFEST_NAME).read_text(encoding="utf-8"))
        assert manifest["n_events"] == 12
        assert manifest["generator"]["seed"] == 7
        assert manifest["boundaries"]["p33_3"] <= manifest["boundaries"]["p66_7"]
        assert (out / "speed_distribution.csv").exists()

    def test_split_too_few_events(self, tmp_path, config_file, synthetic_events):
        """测试少于 9 个事件时退出码 2"""
        events = save_events(synthetic_events, tmp_path / "few.jsonl")
        code = main(["split", "--in", str(events), "--out-dir", str(tmp_path / "t"), "--config", str(config_file)])
        assert code == 2

    def test_split_parse_error(self, tmp_path, config_file):
        """测试事件文件解析失败时退出码 3"""
        events = tmp_path / "bad.jsonl"
        lines = [
            "{broken",
            json.dumps({"event_id": "a", "dt": 0.1, "lv_speed": {"x": 1}, "fv_speed": [1.0], "spacing": [5.0]}),
        ]
        for line in lines:
            events.write_text(line + "\n", encoding="utf-8")
            code = main(["split", "--in", str(events), "--out-dir", str(tmp_path / "t"), "--config", str(config_file)])
            assert code == 3

    def test_missing_task_file(self, tmp_path, config_file, tasks_dir):
        """测试缺少任务文件时退出码 3"""
        (tasks_dir / task_filename(2)).unlink()
        code = main(["train", "--tasks-dir", str(tasks_dir), "--out-dir", str(tmp_path / "o"), "--config", str(config_file)])
        assert code == 3

    def test_evaluate_without_checkpoints(self, tmp_path, config_file, tasks_dir):
        """测试没有检查点时退出码 5"""
        empty = tmp_path / "empty"
        empty.mkdir()
        code = main(
            ["evaluate", "--tasks-dir", str(tasks_dir), "--checkpoints-dir", str(empty),
             "--out-dir", str(tmp_path / "report"), "--config", str(config_file)]
        )
        assert code == 5

    def test_train_evaluate_report(self, tmp_path, config_file, tasks_dir):
        """测试训练、评估与由矩阵重新生成报告"""
        run = tmp_path / "runs" / "ewc"
        code = main(
            ["train", "--tasks-dir", str(tasks_dir), "--method", "ewc", "--out-dir", str(run),
             "--config", str(config_file)]
        )
        assert code == 0
        for stage in (1, 2, 3):
            assert (run / f"ewc_stage{stage}.dfw").exists()
        assert (run / "history.csv").exists()
        run_config = yaml.safe_load((run / "run_config.txt").read_text(encoding="utf-8"))
        assert run_config["method"] == "ewc"
        assert run_config["reg_lambda"] == 1000.0

        report_dir = tmp_path / "report"
        common = ["--tasks-dir", str(tasks_dir), "--checkpoints-dir", str(tmp_path / "runs"),
                  "--out-dir", str(report_dir), "--config", str(config_file)]
        assert main(["evaluate"] + common) == 0
        first = (report_dir / REPORT_MD).read_text(encoding="utf-8")
        matrix = (report_dir / MATRIX_CSV).read_text(encoding="utf-8")

        assert main(["report"] + common) == 0
        assert (report_dir / REPORT_MD).read_text(encoding="utf-8") == first
        assert (report_dir / MATRIX_CSV).read_text(encoding="utf-8") == matrix
        assert (report_dir / "traj_task3.csv").exists()
