import importlib
import os


def sneaky(cmd):
    getattr(os, "system")(cmd)
    __import__("os").popen(cmd)
    importlib.import_module("subprocess").run(cmd)
