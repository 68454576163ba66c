"""Builds expected.json for the micro-script corpus.

Reference resolution is done by the interpreter, not by reimplementing the
analyzer: each script's import statements and `name = a.b` alias assignments
are executed (nothing else), then every load-context Name/Attribute chain is
evaluated in that namespace and compared by identity with the objects the
unsafe-API table names. Missing third-party modules are replaced by stub
packages whose attributes are unique per dotted path.

Resolutions that need a call to happen (getattr with a literal, __import__,
methods on constructed objects) or a Python 2 builtin are hand-traced in
HAND_TRACED below.
"""
import ast
import builtins
import importlib
import importlib.abc
import importlib.machinery
import importlib.util
import json
import os
import sys
import types

HERE = os.path.dirname(os.path.abspath(__file__))
TABLE = os.path.join(HERE, "..", "..", "..", "config", "unsafe_apis.tsv")

# script -> [(api, line, reason)]
HAND_TRACED = {
    "s10_socket.py": [("socket.connect", 6, "method on socket.socket(...) result")],
    "s18_dynamic.py": [
        ("os.system", 6, "getattr(os, 'system')"),
        ("os.popen", 7, "__import__('os').popen"),
        ("subprocess.run", 8, "importlib.import_module('subprocess').run"),
    ],
    "s23_execfile.py": [("execfile", 5, "Python 2 builtin, absent from Python 3")],
    "s26_session_instance.py": [
        ("requests.get", 6, "method on requests.Session() result"),
        ("requests.post", 7, "method on requests.Session() result"),
    ],
}


class Sentinel:
    def __init__(self, path):
        self.path = path

    def __repr__(self):
        return "<stub %s>" % self.path


class StubModule(types.ModuleType):
    def __getattr__(self, name):
        if name.startswith("__"):
            raise AttributeError(name)
        value = Sentinel(self.__name__ + "." + name)
        setattr(self, name, value)
        return value


class StubFinder(importlib.abc.MetaPathFinder, importlib.abc.Loader):
    """Stands in for the table's top-level modules that are not installed."""

    def __init__(self, roots):
        self.roots = roots

    def find_spec(self, fullname, path, target=None):
        if fullname.split(".")[0] not in self.roots:
            return None
        return importlib.machinery.ModuleSpec(fullname, self, is_package=True)

    def create_module(self, spec):
        mod = StubModule(spec.name)
        mod.__path__ = []
        mod.__all__ = []
        return mod

    def exec_module(self, module):
        pass


def load_table():
    entries = []
    with open(TABLE) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            entries.append((cols[0], cols[1]))
    return entries


def resolve_path(path):
    parts = path.split(".")
    if len(parts) == 1:
        return getattr(builtins, path, None)
    for i in range(len(parts) - 1, 0, -1):
        try:
            obj = importlib.import_module(".".join(parts[:i]))
        except ImportError:
            continue
        try:
            for p in parts[i:]:
                obj = getattr(obj, p)
            return obj
        except AttributeError:
            return None
    return None


def table_objects(entries):
    """[(object, api, category)] with prefix entries expanded over the module."""
    out = []
    for category, pattern in entries:
        if pattern.endswith("*"):
            mod_name, _, stem = pattern[:-1].rpartition(".")
            mod = importlib.import_module(mod_name)
            for name in sorted(dir(mod)):
                if name.startswith(stem) and name != stem:
                    out.append((getattr(mod, name), mod_name + "." + name, category))
            continue
        obj = resolve_path(pattern)
        if obj is not None:
            out.append((obj, pattern, category))
    return out


def is_chain(node):
    while isinstance(node, ast.Attribute):
        node = node.value
    return isinstance(node, ast.Name)


def namespace_for(tree):
    ns = {"__name__": "microscript"}
    binders = [n for n in ast.walk(tree) if isinstance(n, (ast.Import, ast.ImportFrom))]
    binders += [
        n for n in ast.walk(tree)
        if isinstance(n, ast.Assign) and len(n.targets) == 1 and isinstance(n.targets[0], ast.Name)
        and is_chain(n.value)
    ]
    binders.sort(key=lambda n: (n.lineno, n.col_offset))
    for stmt in binders:
        try:
            exec(compile(ast.Module(body=[stmt], type_ignores=[]), "<binder>", "exec"), ns)
        except (ImportError, NameError, AttributeError):
            pass
    return ns


def expected_for(path, objects):
    with open(path, "rb") as f:
        tree = ast.parse(f.read())
    ns = namespace_for(tree)
    found = set()
    for node in ast.walk(tree):
        if not isinstance(node, (ast.Name, ast.Attribute)) or not isinstance(node.ctx, ast.Load):
            continue
        if not is_chain(node):
            continue
        try:
            value = eval(compile(ast.Expression(body=node), "<ref>", "eval"), ns)
        except Exception:
            continue
        for obj, api, category in objects:
            if value is obj:
                found.add((api, category, node.lineno, node.col_offset))
    return found


def main():
    entries = load_table()
    roots = {p.split(".")[0] for _, p in entries if "." in p}
    missing = {r for r in roots if importlib.util.find_spec(r) is None}
    sys.meta_path.append(StubFinder(missing))
    category_of = {}
    for category, pattern in entries:
        category_of[pattern] = category
    objects = table_objects(entries)
    result = {}
    for name in sorted(os.listdir(HERE)):
        if not name.endswith(".py") or name == os.path.basename(__file__):
            continue
        found = expected_for(os.path.join(HERE, name), objects)
        triples = [[api, cat, line] for api, cat, line, _ in found]
        for api, line, _reason in HAND_TRACED.get(name, []):
            cat = category_of.get(api)
            if cat is None:
                cat = next(c for c, p in entries if p.endswith("*") and api.startswith(p[:-1]))
            triples.append([api, cat, line])
        result[name] = sorted(triples, key=lambda t: (t[2], t[0]))
    with open(os.path.join(HERE, "expected.json"), "w") as f:
        json.dump(result, f, indent=1, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
