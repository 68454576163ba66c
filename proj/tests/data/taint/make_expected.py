"""Builds expected_flows.json for the taint corpus by running each script.

Every non-stdlib-pure import is replaced by a recording proxy. A proxy is a
str subclass whose text is the concatenation of everything that flowed into
it: calling a configured source API prepends a unique marker, and any other
call returns the receiver text plus the argument text. exec/eval/compile/
__import__/open are swapped in the script's builtins. When a configured sink
is called, the markers and rule-matched literals found in its flattened
arguments are the sources that reached it.

After the module body runs, every function and every method of every class
defined in the script is called with untainted dummy arguments, once with
sys.platform == "linux" and once with "win32". A line budget stops loops.

Sources and sinks come from config/taint.conf. The bundled rules are
re-expressed below with Python regular expressions.
"""
import builtins
import dis
import io
import json
import os
import re
import sys
import tokenize
import types

HERE = os.path.dirname(os.path.abspath(__file__))
CONF = os.path.join(HERE, "..", "..", "..", "config", "taint.conf")

REAL_MODULES = {"json", "math", "re", "time", "random", "string", "collections", "itertools", "functools",
                "typing", "dataclasses", "sys"}

# rule -> (taint_source_category, condition over per-string presence, patterns)
RULES = {
    "reverse_shell": ("RemoteControl", lambda h: h[0] or h[1] or h[2] or h[3] or h[4] or (h[5] and h[6]), [
        re.compile(re.escape("/dev/tcp/")),
        re.compile(re.escape("pty.spawn")),
        re.compile(r"/bin/(ba|z|da)?sh[\"']?\s+-i\b"),
        re.compile(r"\bn(c|cat|etcat)\s+(-\w+\s+)*-e\s"),
        re.compile(re.escape("Net.Sockets.TCPClient"), re.I),
        re.compile(re.escape("socket.socket")),
        re.compile(re.escape("dup2")),
    ]),
    "chrome_credentials": ("SensitiveInfoLeak", lambda h: sum(h) >= 2, [
        re.compile(re.escape("Login Data")),
        re.compile(re.escape("Local State")),
        re.compile(re.escape("CryptUnprotectData")),
        re.compile(r"Google[\\/]+Chrome[\\/]+User Data", re.I),
        re.compile(r"[\\/]Network[\\/]+Cookies\b"),
    ]),
    "base64_blob": ("EmbeddedShell", lambda h: h[0], [re.compile(r"[A-Za-z0-9+/]{200,}={0,2}")]),
    "crypto_miner": ("Cryptojacking", any, [
        re.compile(re.escape("stratum+tcp://"), re.I),
        re.compile(re.escape("stratum+ssl://"), re.I),
        re.compile(re.escape("xmrig"), re.I),
        re.compile(re.escape("--donate-level")),
    ]),
}


def load_config():
    cats, cur, key = {}, None, None
    for raw in open(CONF):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        s = line.strip()
        if s.startswith("["):
            cur = cats.setdefault(s[1:-1], {"sources": [], "sinks": [], "sanitizers": []})
            continue
        if not line[0].isspace():
            key, _, s = s.partition(":")
            key = key.strip()
        cur[key] += [t for t in re.split(r"[,\s]+", s) if t]
    return cats


CONFIG = load_config()


def item_matches(item, path):
    if item.endswith("*"):
        return path.startswith(item[:-1]) and len(path) > len(item) - 1
    return item == path


def is_source(path):
    return any(item_matches(i, path) for c in CONFIG.values() for i in c["sources"] if not i.startswith("pattern:"))


def is_sink(path):
    return any(item_matches(i, path) for c in CONFIG.values() for i in c["sinks"])


MARK = re.compile(r"@@T(\d+)@@")


class Run:
    def __init__(self, filename):
        self.filename = filename
        self.markers = {}  # (api, line) -> id
        self.sinks = []    # (api, line, text)
        self.budget = 0

    def line(self):
        f = sys._getframe(1)
        while f is not None and f.f_code.co_filename != self.filename:
            f = f.f_back
        return f.f_lineno if f is not None else 0

    def marker(self, api, line):
        k = (api, line)
        if k not in self.markers:
            self.markers[k] = len(self.markers)
        return "@@T%d@@" % self.markers[k]


RUN = None


def flatten(x, depth=0):
    if depth > 6:
        return ""
    if isinstance(x, str):
        return str.__str__(x)
    if isinstance(x, (bytes, bytearray)):
        return bytes(x).decode("latin-1")
    if isinstance(x, dict):
        return "|".join(flatten(k, depth + 1) + "|" + flatten(v, depth + 1) for k, v in x.items())
    if isinstance(x, (list, tuple, set, frozenset)):
        return "|".join(flatten(v, depth + 1) for v in x)
    if isinstance(x, (int, float, bool)) or x is None:
        return str(x)
    if hasattr(x, "__dict__") and not isinstance(x, type):
        return flatten(vars(x), depth + 1)
    return ""


class Proxy(str):
    def __new__(cls, path, text=""):
        o = str.__new__(cls, text)
        o._path = path
        return o

    def __getattr__(self, name):
        if name.startswith("__"):
            raise AttributeError(name)
        path = self._path + "." + name
        text = str.__str__(self)
        if is_source(path):
            text = RUN.marker(path, RUN.line()) + text
        return Proxy(path, text)

    def __call__(self, *args, **kw):
        line = RUN.line()
        argtext = flatten(list(args) + list(kw.values()))
        if is_sink(self._path):
            RUN.sinks.append((self._path, line, argtext))
        text = str.__str__(self) + "|" + argtext
        if is_source(self._path):
            text = RUN.marker(self._path, line) + text
        parent = self._path.rsplit(".", 1)[0] if "." in self._path else "<obj>"
        return Proxy(parent, text)

    def __getitem__(self, k):
        return Proxy(self._path, str.__str__(self) + "|" + flatten(k))

    def __iter__(self):
        yield self
        yield self

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def __str__(self):
        return str.__str__(self)


IMPORT_NAME = dis.opmap["IMPORT_NAME"]


def make_builtins():
    b = dict(vars(builtins))

    def fake_import(name, globals=None, locals=None, fromlist=(), level=0):
        caller = sys._getframe(1)
        by_statement = caller.f_code.co_code[caller.f_lasti] == IMPORT_NAME
        if not by_statement:
            RUN.sinks.append(("__import__", RUN.line(), flatten([name])))
        if name.split(".")[0] in REAL_MODULES:
            return __import__(name, globals, locals, fromlist, level)
        if not by_statement:
            return Proxy(name, flatten([name]))
        return Proxy(name if fromlist else name.split(".")[0])

    def sink_builtin(api, returns):
        def f(*args, **kw):
            text = flatten(list(args) + list(kw.values()))
            RUN.sinks.append((api, RUN.line(), text))
            return Proxy("<obj>", text) if returns else None
        return f

    def fake_open(*args, **kw):
        line = RUN.line()
        return Proxy("<obj>", RUN.marker("open", line) + flatten(list(args) + list(kw.values())))

    b["__import__"] = fake_import
    b["exec"] = sink_builtin("exec", False)
    b["eval"] = sink_builtin("eval", True)
    b["compile"] = sink_builtin("compile", True)
    b["open"] = fake_open
    b["print"] = lambda *a, **k: None
    b["input"] = lambda *a: Proxy("<obj>")
    return b


def dummy_args(fn, skip=0):
    code = fn.__code__
    required = code.co_argcount - len(fn.__defaults__ or ())
    return [Proxy("<dummy>") for _ in range(max(0, required - skip))]


def run_script(path, platform):
    global RUN
    src = open(path, encoding="utf-8").read()
    RUN = Run(os.path.abspath(path))
    g = {"__name__": "__main__", "__file__": path, "__builtins__": make_builtins()}

    def tracer(frame, event, arg):
        if frame.f_code.co_filename != RUN.filename:
            return None
        if event == "line":
            RUN.budget += 1
            if RUN.budget > 20000:
                raise TimeoutError("line budget")
        return tracer

    saved = sys.platform
    sys.platform = platform
    sys.settrace(tracer)
    try:
        code = builtins.compile(src, RUN.filename, "exec")
        try:
            builtins.exec(code, g)
        except Exception:
            pass
        for name, obj in list(g.items()):
            if isinstance(obj, types.FunctionType) and obj.__code__.co_filename == RUN.filename:
                try:
                    obj(*dummy_args(obj))
                except Exception:
                    pass
            elif isinstance(obj, type) and getattr(obj, "__module__", None) == "__main__":
                try:
                    init = obj.__dict__.get("__init__")
                    inst = obj(*dummy_args(init, 1)) if isinstance(init, types.FunctionType) else obj()
                except Exception:
                    continue
                for m in obj.__dict__.values():
                    if isinstance(m, types.FunctionType) and m.__name__ != "__init__":
                        try:
                            getattr(inst, m.__name__)(*dummy_args(m, 1))
                        except Exception:
                            pass
    finally:
        sys.settrace(None)
        sys.platform = saved
    return src, RUN


def pattern_literals(src):
    """(rule, category, line, literal value) for each string literal holding a hit of a rule that fires."""
    fired = {}
    for rule, (cat, cond, pats) in RULES.items():
        if cond([bool(p.search(src)) for p in pats]):
            fired[rule] = (cat, pats)
    lines = src.splitlines(keepends=True)
    starts = [0]
    for ln in lines:
        starts.append(starts[-1] + len(ln))
    out = []
    for tok in tokenize.generate_tokens(io.StringIO(src).readline):
        if tok.type != tokenize.STRING:
            continue
        begin = starts[tok.start[0] - 1] + tok.start[1]
        end = starts[tok.end[0] - 1] + tok.end[1]
        try:
            value = eval(tok.string, {})
        except Exception:
            continue
        if isinstance(value, bytes):
            value = value.decode("latin-1")
        for rule, (cat, pats) in fired.items():
            if any(p.match(src, pos) for p in pats for pos in range(begin, end)):
                out.append((rule, cat, tok.start[0], value))
    return out


def flows_for(path):
    found = set()
    literals = None
    for platform in ("linux", "win32"):
        src, run = run_script(path, platform)
        if literals is None:
            literals = pattern_literals(src)
        by_id = {v: k for k, v in run.markers.items()}
        for sink_api, sink_line, text in run.sinks:
            reached = [by_id[int(m)] for m in MARK.findall(text)]
            for cat, c in CONFIG.items():
                if not any(item_matches(i, sink_api) for i in c["sinks"]):
                    continue
                for api, line in reached:
                    if any(item_matches(i, api) for i in c["sources"] if not i.startswith("pattern:")):
                        found.add((cat, api, line, sink_api, sink_line))
                for rule, meta_cat, line, value in literals:
                    listed = ("pattern:" + rule) in c["sources"]
                    if (listed or meta_cat == cat) and value and value in text:
                        found.add((cat, "pattern:" + rule, line, sink_api, sink_line))
    return sorted(found, key=lambda f: (f[4], f[0], f[2], f[1], f[3]))


def main():
    out = {}
    for name in sorted(os.listdir(HERE)):
        if name.endswith(".py") and name != "make_expected.py":
            out[name] = [
                {"category": c, "source": s, "source_line": sl, "sink": k, "sink_line": kl}
                for c, s, sl, k, kl in flows_for(os.path.join(HERE, name))
            ]
    with open(os.path.join(HERE, "expected_flows.json"), "w") as fh:
        json.dump(out, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
