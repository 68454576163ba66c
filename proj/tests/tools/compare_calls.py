"""Checks py_calls against CPython's ast on every .py file under the given roots.

usage: compare_calls.py <py_calls binary> <root>...
"""
import os
import subprocess
import sys

sys.path.insert(0, os.path.dirname(__file__))
import py_calls  # noqa: E402


def main():
    binary, roots = sys.argv[1], sys.argv[2:]
    files = []
    for root in roots:
        for d, _, names in os.walk(root):
            files += [os.path.join(d, n) for n in sorted(names) if n.endswith(".py")]
    files.sort()
    bad = 0
    for i in range(0, len(files), 200):
        chunk = files[i:i + 200]
        out = subprocess.run([binary] + chunk, capture_output=True, text=True, check=True).stdout.splitlines()
        for path, ours in zip(chunk, out):
            ref = py_calls.calls(path).split()
            got = ours.split()
            if ref[1] != got[1] or (ref[1] == "OK" and sorted(ref[2:]) != sorted(got[2:])):
                bad += 1
                print("MISMATCH", path, "ref:", " ".join(ref[1:4]), "ours:", " ".join(got[1:4]))
    print("%d files, %d mismatches" % (len(files), bad))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
