import jsonlines
import pytest

from reasoning.config import PipelineConfig
from reasoning.models import PipelineRun, TraceRecord
from reasoning.tasks import (
    _load_encoder,
    build_collaborators,
    build_encoder,
    head_path,
    load_encoder,
    load_pointer_model,
    process_pipeline_run,
)
from reasoning.exceptions import ConfigurationError

from .conftest import SUBTRACTION_ITEMS

pytestmark = pytest.mark.django_db


def make_run(files, **config_overrides):
    config = PipelineConfig.load(files["config"], config_overrides)
    return PipelineRun.objects.create(
        name="fixture",
        input_path=str(files["questions"]),
        output_path=str(files["dir"] / "out" / "traces.jsonl"),
        config_json=config.to_dict(),
    )


def test_process_pipeline_run_completes(pipeline_files):
    run = make_run(pipeline_files)
    process_pipeline_run.apply(args=[run.id])
    run.refresh_from_db()

    assert run.status == "completed"
    assert run.total_questions == len(SUBTRACTION_ITEMS)
    assert run.answered_count == len(SUBTRACTION_ITEMS)
    assert run.progress_percentage == 100
    assert run.error_counts["missing_operand"] == 0

    records = list(run.traces.all())
    assert [r.position for r in records] == list(range(len(SUBTRACTION_ITEMS)))
    assert records[0].final_answer == "7"
    assert records[0].payload["decomposition"]["q1"] == "How many cats were there?"

    with jsonlines.open(run.output_path) as reader:
        assert len(list(reader)) == len(SUBTRACTION_ITEMS)


def test_process_pipeline_run_parallel(pipeline_files):
    run = make_run(pipeline_files, parallelism=3)
    process_pipeline_run.apply(args=[run.id])
    run.refresh_from_db()
    assert run.status == "completed"
    assert TraceRecord.objects.filter(run=run, error_code="none").count() == len(SUBTRACTION_ITEMS)


def test_process_pipeline_run_marks_failure(pipeline_files):
    run = make_run(pipeline_files, **{"pointer.weights": str(pipeline_files["dir"] / "missing.npz")})
    process_pipeline_run.apply(args=[run.id])
    run.refresh_from_db()
    assert run.status == "failed"
    assert "ConfigurationError" in run.error_message
    assert run.error_type == "ConfigurationError"
    assert run.traces.count() == 0


def test_head_path_defaults_to_first_seed(pipeline_files):
    config = PipelineConfig.load(pipeline_files["config"])
    assert head_path(config).name == "pointer_seed1.npz"
    assert head_path(config, 3).name == "pointer_seed3.npz"


def test_annotated_pointer_source(pipeline_files):
    from .conftest import FIXTURES

    config = PipelineConfig.load(pipeline_files["config"], {
        "pointer.source": "annotated",
        "paths.annotations": str(FIXTURES / "annotations.txt"),
    })
    model = load_pointer_model(config)
    assert model.predict("How many more cats were there than dogs?").indices == (3, 3, 7, 7)


def test_hidden_size_mismatch(pipeline_files, tmp_path):
    import numpy as np

    from reasoning.pointer import PointerHead, save_head

    save_head(PointerHead(8, np.zeros((8, 4))), tmp_path / "small.npz")
    config = PipelineConfig.load(pipeline_files["config"], {"pointer.weights": str(tmp_path / "small.npz")})
    with pytest.raises(ConfigurationError):
        build_collaborators(config)


@pytest.mark.parametrize("key,value", [
    ("encoder.backend", "word2vec"),
    ("reader.backend", "carrier-pigeon"),
    ("parser.adapter", "stanza"),
    ("pointer.source", "oracle"),
])
def test_unknown_backends(pipeline_files, key, value):
    config = PipelineConfig.load(pipeline_files["config"], {key: value})
    with pytest.raises(ConfigurationError):
        build_collaborators(config)


def test_encoder_is_loaded_once():
    first = _load_encoder("mock", "unused", 64, "cpu")
    assert _load_encoder("mock", "unused", 64, "cpu") is first


def test_rerun_clears_the_error_type(pipeline_files):
    run = make_run(pipeline_files)
    run.status = "failed"
    run.error_type = "TransportError"
    run.save()
    process_pipeline_run.apply(args=[run.id])
    run.refresh_from_db()
    assert run.status == "completed"
    assert run.error_type == ""


def test_build_encoder_gives_a_fresh_instance(pipeline_files):
    config = PipelineConfig.load(pipeline_files["config"])
    assert build_encoder(config) is not build_encoder(config)
    assert load_encoder(config) is load_encoder(config)
    assert build_encoder(config) is not load_encoder(config)
