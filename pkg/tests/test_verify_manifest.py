import json

from core import logging_io
from core.logging_io import RunManifest, manifest_path
from tools import verify_manifest
from tools.verify_manifest import main, verify


def _manifest(tmp_path):
    out = tmp_path / "result.csv"
    out.write_text("x,y\n0.5,0.25\n")
    m = RunManifest(argv=["dim", "box"], seed=0)
    m.add_output(str(out))
    m.write(manifest_path(str(out)))
    return out, manifest_path(str(out))


def test_clean_manifest(tmp_path, capsys):
    _, path = _manifest(tmp_path)
    assert verify(path) == []
    assert main([path]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_tampered_output(tmp_path):
    out, path = _manifest(tmp_path)
    out.write_text("x,y\n0.5,0.26\n")
    assert verify(path) == [f"{out}: checksum mismatch"]
    assert main([path]) == 1


def test_missing_output(tmp_path):
    out, path = _manifest(tmp_path)
    out.unlink()
    assert verify(path) == [f"{out}: missing"]


def test_relocated_manifest_resolves_beside_itself(tmp_path):
    out, path = _manifest(tmp_path)
    doc = json.loads(open(path).read())
    doc["outputs"] = {"elsewhere/result.csv": doc["outputs"][str(out)]}
    with open(path, "w") as f:
        json.dump(doc, f)
    assert verify(path) == []


def test_foreign_json_and_usage(tmp_path):
    other = tmp_path / "other.json"
    other.write_text('{"format": "something"}')
    assert verify(str(other)) == [f"{other}: not a fractalbench manifest"]
    assert main([]) == 2


def test_digest_matches_the_manifest_writer(tmp_path):
    out, path = _manifest(tmp_path)
    assert verify_manifest.sha256_file is logging_io.sha256_file
    assert json.loads(open(path).read())["outputs"][str(out)] == verify_manifest.sha256_file(str(out))
