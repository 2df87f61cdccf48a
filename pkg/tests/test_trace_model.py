import pytest

from workload_profiler.errors import (
    DuplicateIdError,
    NoValidRowsError,
    SchemaError,
    TraceReadError,
)
from workload_profiler.trace_model import (
    Dataset,
    TraceSchema,
    Workload,
    load_trace,
    runtime_matrix,
    schema_for,
    write_trace,
)

DESCRIPTOR = {
    "columns": {
        "job": "id",
        "user": "metadata",
        "cpu": "runtime",
        "mem": "runtime",
    }
}


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_all_valid(tmp_path):
    trace = write_csv(
        tmp_path / "t.csv",
        "job,user,cpu,mem\nj1,a,1.0,2.0\nj2,b,3.5,4.5\nj3,a,5.0,6.0\n",
    )
    ds, dropped = load_trace(trace, TraceSchema.from_json(DESCRIPTOR))
    assert len(ds) == 3 and dropped == 0
    assert ds.workloads[1].runtime == {"cpu": 3.5, "mem": 4.5}
    # no timestamp column: submission order is row order
    assert [w.submitted_at for w in ds.workloads] == [0, 1, 2]


def test_load_drops_empty_cell(tmp_path):
    trace = write_csv(
        tmp_path / "t.csv",
        "job,user,cpu,mem\nj1,a,1.0,2.0\nj2,b,,4.5\nj3,a,5.0,6.0\n",
    )
    ds, dropped = load_trace(trace, TraceSchema.from_json(DESCRIPTOR))
    assert len(ds) == 2 and dropped == 1
    assert ds.ids() == ("j1", "j3")


def test_load_drops_non_finite(tmp_path):
    trace = write_csv(
        tmp_path / "t.csv",
        "job,user,cpu,mem\nj1,a,inf,2.0\nj2,b,1.0,nan\nj3,a,5.0,6.0\n",
    )
    ds, dropped = load_trace(trace, TraceSchema.from_json(DESCRIPTOR))
    assert len(ds) == 1 and dropped == 2


def test_duplicate_id_rejected(tmp_path):
    trace = write_csv(
        tmp_path / "t.csv", "job,user,cpu,mem\nj1,a,1.0,2.0\nj1,b,3.0,4.0\n"
    )
    with pytest.raises(DuplicateIdError):
        load_trace(trace, TraceSchema.from_json(DESCRIPTOR))


def test_zero_valid_rows(tmp_path):
    trace = write_csv(tmp_path / "t.csv", "job,user,cpu,mem\nj1,a,,2.0\n")
    with pytest.raises(NoValidRowsError):
        load_trace(trace, TraceSchema.from_json(DESCRIPTOR))


def test_unreadable_file():
    with pytest.raises(TraceReadError):
        load_trace("/nonexistent/trace.csv", TraceSchema.from_json(DESCRIPTOR))


def test_descriptor_validation():
    with pytest.raises(SchemaError):
        TraceSchema(columns={"a": "metadata", "b": "runtime"})  # no id
    with pytest.raises(SchemaError):
        TraceSchema(columns={"a": "id", "b": "runtime"})  # no metadata
    with pytest.raises(SchemaError):
        TraceSchema(columns={"a": "id", "b": "metadata"})  # no runtime
    with pytest.raises(SchemaError):
        TraceSchema(columns={"a": "id", "b": "metadata", "c": "wat"})
    with pytest.raises(SchemaError):
        TraceSchema(
            columns={"a": "id", "b": "metadata", "c": "runtime"}, bucketize=("c",)
        )


def test_runtime_matrix_order(tiny_dataset):
    m = runtime_matrix(tiny_dataset)
    assert m.rows.shape == (5, 2)
    assert m.transform_applied == "none"
    for i, w in enumerate(tiny_dataset.workloads):
        assert m.rows[i, 0] == w.runtime["cpu"]
        assert m.rows[i, 1] == w.runtime["mem"]


def test_single_workload_matrix():
    ds = Dataset(
        schema_runtime=("cpu", "mem"),
        schema_metadata=("u",),
        workloads=(Workload("w", {"u": "x"}, {"cpu": 1.0, "mem": 2.0}),),
    )
    assert runtime_matrix(ds).rows.tolist() == [[1.0, 2.0]]


def test_empty_runtime_schema_rejected():
    with pytest.raises(SchemaError):
        Dataset(
            schema_runtime=(),
            schema_metadata=("u",),
            workloads=(Workload("w", {"u": "x"}, {}),),
        )


def test_round_trip(tmp_path, tiny_dataset):
    out = tmp_path / "o.csv"
    write_trace(tiny_dataset, out)
    reloaded, dropped = load_trace(out, schema_for(tiny_dataset))
    assert dropped == 0
    assert reloaded.ids() == tiny_dataset.ids()
    for a, b in zip(reloaded.workloads, tiny_dataset.workloads):
        assert a.runtime == b.runtime  # numeric fields reproduce bit-exactly
        assert a.metadata == b.metadata
        assert a.submitted_at == b.submitted_at


def test_round_trip_awkward_floats(tmp_path):
    values = [0.1, 1e-17, 123456789.123456, 2.0**-40, 7.0]
    ds = Dataset(
        schema_runtime=("v",),
        schema_metadata=("m",),
        workloads=tuple(
            Workload(f"w{i}", {"m": "x"}, {"v": v}) for i, v in enumerate(values)
        ),
    )
    out = tmp_path / "o.csv"
    write_trace(ds, out)
    reloaded, _ = load_trace(out, schema_for(ds))
    for a, b in zip(reloaded.workloads, ds.workloads):
        assert a.runtime["v"] == b.runtime["v"]


def test_bucketize_quartiles(tmp_path):
    lines = ["job,user,gpu_req,cpu"]
    for i in range(8):
        lines.append(f"j{i},a,{i + 1}.0,1.0")
    trace = write_csv(tmp_path / "t.csv", "\n".join(lines) + "\n")
    schema = TraceSchema(
        columns={"job": "id", "user": "metadata", "gpu_req": "metadata", "cpu": "runtime"},
        bucketize=("gpu_req",),
    )
    ds, _ = load_trace(trace, schema)
    buckets = [w.metadata["gpu_req"] for w in ds.workloads]
    assert buckets == ["q1", "q1", "q2", "q2", "q3", "q3", "q4", "q4"]
    assert set(ds.bucket_bounds) == {"gpu_req"}
    # reusing bounds reproduces the same labels
    ds2, _ = load_trace(trace, schema, bucket_bounds=ds.bucket_bounds)
    assert [w.metadata["gpu_req"] for w in ds2.workloads] == buckets


def test_timestamp_column(tmp_path):
    trace = write_csv(
        tmp_path / "t.csv",
        "job,user,cpu,ts\nj1,a,1.0,100\nj2,b,2.0,200\n",
    )
    schema = TraceSchema(
        columns={"job": "id", "user": "metadata", "cpu": "runtime", "ts": "timestamp"}
    )
    ds, _ = load_trace(trace, schema)
    assert [w.submitted_at for w in ds.workloads] == [100, 200]
