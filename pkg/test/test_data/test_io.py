"""事件文件读写测试"""

import json

import numpy as np
import pytest

from src.data.io import (load_events, load_tasks, read_manifest, save_events,
                         task_filename, validate_event, write_manifest,
                         write_task_file)
from src.utils.exceptions import (ArtifactIOError, EventParseError,
                                  InvalidArgumentError)


def record(event_id: str, n: int = 12, spacing: float = 20.0) -> dict:
    return {
        "event_id": event_id,
        "dt": 0.1,
        "lv_speed": [10.0] * n,
        "fv_speed": [10.0] * n,
        "spacing": [spacing] * n,
    }


def write_lines(path, records) -> None:
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


class TestJsonLines:
    """JSON Lines 事件文件测试类"""

    def test_save_then_load(self, tmp_path, synthetic_events):
        """测试保存后读取得到相同事件"""
        path = save_events(synthetic_events, tmp_path / "events.jsonl")
        loaded = load_events(path)
        assert [e.event_id for e in loaded] == [e.event_id for e in synthetic_events]
        assert np.array_equal(loaded[3].spacing, synthetic_events[3].spacing)

    def test_negative_spacing_reports_line(self, tmp_path):
        """测试负间距时报出行号"""
        bad = record("bad")
        bad["spacing"][5] = -1.0
        path = tmp_path / "events.jsonl"
        write_lines(path, [record("ok"), bad])
        with pytest.raises(EventParseError) as exc:
            load_events(path)
        assert exc.value.line == 2
        assert exc.value.event_id == "bad"
        assert exc.value.exit_code == 3

    @pytest.mark.parametrize("value", [{"x": 1}, "fast", [[1.0, 2.0], [3.0]]])
    def test_series_not_a_list(self, tmp_path, value):
        """测试序列字段不是数值列表时报出行号"""
        bad = record("bad")
        bad["lv_speed"] = value
        path = tmp_path / "events.jsonl"
        write_lines(path, [record("ok"), bad])
        with pytest.raises(EventParseError) as exc:
            load_events(path)
        assert exc.value.line == 2
        assert "lv_speed" in exc.value.message
        assert exc.value.exit_code == 3

    def test_empty_file(self, tmp_path):
        """测试空文件返回空列表"""
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_events(path) == []

    def test_duplicate_ids(self, tmp_path):
        """测试重复事件 ID"""
        path = tmp_path / "dup.jsonl"
        write_lines(path, [record("a"), record("a")])
        with pytest.raises(EventParseError) as exc:
            load_events(path)
        assert exc.value.line == 2

    def test_malformed_json(self, tmp_path):
        """测试非法 JSON 行"""
        path = tmp_path / "broken.jsonl"
        path.write_text(json.dumps(record("a")) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(EventParseError) as exc:
            load_events(path)
        assert exc.value.line == 2

    def test_horizon_length(self, tmp_path):
        """测试事件短于 H+2 时报错"""
        path = tmp_path / "short.jsonl"
        write_lines(path, [record("short", n=11)])
        assert len(load_events(path)) == 1
        with pytest.raises(EventParseError):
            load_events(path, horizon=10)

    def test_missing_file(self, tmp_path):
        """测试文件不存在"""
        with pytest.raises(ArtifactIOError):
            load_events(tmp_path / "none.jsonl")

    def test_validate_event(self, event_factory):
        """测试事件长度检查"""
        event = event_factory("v", n_steps=12)
        assert validate_event(event, horizon=10).event_id == "v"
        with pytest.raises(InvalidArgumentError):
            validate_event(event, horizon=11)


class TestCsv:
    """CSV 长表测试类"""

    def test_save_then_load(self, tmp_path, synthetic_events):
        """测试 CSV 保存后读取"""
        path = save_events(synthetic_events[:2], tmp_path / "events.csv")
        loaded = load_events(path)
        assert [e.event_id for e in loaded] == ["wave-00", "wave-01"]
        assert loaded[0].dt == pytest.approx(0.1)
        assert np.array_equal(loaded[1].fv_speed, synthetic_events[1].fv_speed)

    def test_bad_row(self, tmp_path):
        """测试非正间距的行号"""
        path = tmp_path / "bad.csv"
        path.write_text(
            "event_id,t,lv_speed,fv_speed,spacing\n"
            "a,0.0,10,10,20\n"
            "a,0.1,10,10,0\n",
            encoding="utf-8",
        )
        with pytest.raises(EventParseError) as exc:
            load_events(path)
        assert exc.value.line == 3

    def test_missing_column(self, tmp_path):
        """测试缺列"""
        path = tmp_path / "cols.csv"
        path.write_text("event_id,t,lv_speed\na,0,1\n", encoding="utf-8")
        with pytest.raises(EventParseError):
            load_events(path)


class TestTaskFiles:
    """任务文件测试类"""

    def write_split_dir(self, root, task_sets):
        for task in task_sets:
            write_task_file(task, root / task_filename(task.task_id))
        write_manifest({"boundaries": {"p33_3": 8.0, "p66_7": 12.0}}, root)

    def test_load_tasks(self, tmp_path, task_sets):
        """测试读取 split 输出目录"""
        self.write_split_dir(tmp_path, task_sets)
        loaded = load_tasks(tmp_path)
        for original, task in zip(task_sets, loaded):
            assert [e.event_id for e in task.train] == [e.event_id for e in original.train]
            assert [e.event_id for e in task.test] == [e.event_id for e in original.test]
        assert loaded[1].speed_range.low == 8.0
        assert read_manifest(tmp_path)["boundaries"]["p66_7"] == 12.0

    def test_missing_task_file(self, tmp_path, task_sets):
        """测试缺少任务文件"""
        self.write_split_dir(tmp_path, task_sets)
        (tmp_path / task_filename(2)).unlink()
        with pytest.raises(ArtifactIOError):
            load_tasks(tmp_path)

    def test_missing_split_tag(self, tmp_path, task_sets):
        """测试任务文件行缺少 split 标签"""
        self.write_split_dir(tmp_path, task_sets)
        save_events(task_sets[0].events, tmp_path / task_filename(1))
        with pytest.raises(EventParseError):
            load_tasks(tmp_path)
