"""End-to-end checks of the hubscan CLI: exit codes, output determinism, manifest and .pyc output."""
import importlib.util
import json
import marshal
import os
import subprocess
import sys
import tempfile
import types

exe, data = sys.argv[1], os.path.abspath(sys.argv[2])
mini = os.path.join(data, "minirepo")
failures = []


def run(*args):
    p = subprocess.run([exe, *args], capture_output=True)
    return p.returncode, p.stdout, p.stderr


def check(name, cond, extra=""):
    print(("ok   " if cond else "FAIL ") + name + (": " + extra if extra and not cond else ""))
    if not cond:
        failures.append(name)


with tempfile.TemporaryDirectory() as tmp:
    rc, out, _ = run("scan", os.path.join(mini, "datasets/acme/plain"), "--fail-on", "low")
    check("clean repo exits 0", rc == 0, str(rc))
    check("single repo is one JSON object", isinstance(json.loads(out), dict))

    rc, _, _ = run("scan", os.path.join(mini, "datasets/acme/plain"), "--fail-on", "info")
    check("info finding trips --fail-on info", rc == 1, str(rc))

    rc, out, _ = run("scan", os.path.join(mini, "models/acme/reverse-shell"))
    check("malicious repo exits 1", rc == 1, str(rc))
    check("reverse shell verdict", json.loads(out)["behavior"] == "RemoteControl")

    rc, _, err = run("scan", "--bogus", mini)
    check("unknown option exits 2", rc == 2, str(rc))
    rc, _, _ = run("scan", os.path.join(tmp, "missing"))
    check("missing path exits 2", rc == 2, str(rc))
    rc, _, _ = run("scan")
    check("no path exits 2", rc == 2, str(rc))
    rc, _, _ = run("scan", mini, "--format", "xml")
    check("bad format exits 2", rc == 2, str(rc))

    bad = os.path.join(tmp, "taint.conf")
    with open(bad, "w") as fh:
        fh.write("[Backdoor]\nsources: not.a.table.api\nsinks: exec\n")
    rc, _, err = run("scan", mini, "--taint-config", bad)
    check("invalid taint config exits 2", rc == 2 and b"not.a.table.api" in err, str(rc))

    a, b = os.path.join(tmp, "a.json"), os.path.join(tmp, "b.json")
    rc1, _, _ = run("scan", mini, "--deterministic", "--jobs", "1", "--out", a)
    rc8, _, _ = run("scan", mini, "--deterministic", "--jobs", "8", "--out", b)
    ja, jb = open(a, "rb").read(), open(b, "rb").read()
    check("jobs 1 and jobs 8 are byte-identical", rc1 == rc8 == 1 and ja == jb)
    reports = json.loads(ja)
    check("mirror root gives one report per repo", isinstance(reports, list) and len(reports) == 13)
    expected = json.load(open(os.path.join(mini, "expected.json")))
    got = {("models/" if r["repo_kind"] == "model" else "datasets/") + r["repo_id"]: r["verdict"] for r in reports}
    check("verdicts match the mini-repo labels", got == {k: v["verdict"] for k, v in expected.items()})

    manifest = os.path.join(tmp, "repos.txt")
    with open(manifest, "w") as fh:
        fh.write("# two repos\n%s\n\n%s\n" % (os.path.join(mini, "datasets/acme/best"),
                                              os.path.join(mini, "models/acme/empty")))
    rc, out, _ = run("scan", "--manifest", manifest, "--deterministic")
    ids = [r["repo_id"] for r in json.loads(out)]
    check("manifest lists repos in order", ids == ["acme/best", "acme/empty"], str(ids))

    rc, out, _ = run("scan", os.path.join(mini, "datasets/acme/best"), "--format", "text")
    check("text report", out.startswith(b"acme/best (dataset): Malicious, CredentialTheft"))

    pyc = os.path.join(tmp, "pyc")
    run("scan", os.path.join(mini, "models/acme/keras-lambda"), "--pyc-dir", pyc)
    path = os.path.join(pyc, "acme_keras-lambda", "model.h5.lambda0.pyc")
    ok = os.path.exists(path)
    if ok:
        blob = open(path, "rb").read()
        ok = blob[:4] == importlib.util.MAGIC_NUMBER and isinstance(marshal.loads(blob[16:]), types.CodeType)
    check("Lambda .pyc loads with this interpreter's marshal", ok)

print("%d failure(s)" % len(failures))
sys.exit(1 if failures else 0)
