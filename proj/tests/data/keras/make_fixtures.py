"""Regenerates the Keras/TensorFlow fixtures and index.json.

Models are written by the installed Keras/TensorFlow savers. Keras-2-style
HDF5 files (which current Keras no longer writes) are assembled with h5py
using the attribute layout Keras 2 produced. keras_metadata.pb is encoded
with a dynamically built descriptor that mirrors SavedMetadata.
"""

import base64
import json
import marshal
import os
import shutil
import sys
import types
import zipfile

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")

import h5py
import keras
import numpy as np
import tensorflow as tf
from google.protobuf import descriptor_pb2, descriptor_pool, message_factory

HERE = os.path.dirname(os.path.abspath(__file__))
# Compiled under a fixed filename so the marshalled co_filename is stable.
# The exec branch is unreachable for tensor inputs.
marker = eval(compile("lambda x: x if x is not None else exec(\"print('FIXTURE-ONLY')\")", "<fixture>", "eval"))
identity = eval(compile("lambda x: x", "<fixture>", "eval"))


def code_strings(code):
    out = []

    def walk(c):
        for s in (c.co_name, c.co_filename):
            out.append(s)
        out.extend(c.co_names)
        out.extend(c.co_varnames)
        for k in c.co_consts:
            if isinstance(k, str):
                out.append(k)
            elif isinstance(k, types.CodeType):
                walk(k)

    walk(code)
    return sorted(set(out))


def layer_names(cfg):
    return [l["class_name"] for l in cfg["config"]["layers"]]


def keras_model(layers):
    m = keras.Sequential(layers)
    m(np.zeros((1, 4), dtype="float32"))
    return m


def save_real(name, model, manifest):
    path = os.path.join(HERE, name)
    if os.path.exists(path):
        os.remove(path)
    model.save(path)
    if name.endswith(".h5"):
        with h5py.File(path) as f:
            cfg = json.loads(f.attrs["model_config"])
    else:
        with zipfile.ZipFile(path) as z:
            cfg = json.loads(z.read("config.json"))
    manifest[name] = {"layers": layer_names(cfg), "saver": "keras " + keras.__version__}


def lambda_entry(name, fn):
    code = base64.encodebytes(marshal.dumps(fn.__code__)).decode("ascii")
    return {
        "class_name": "Lambda",
        "config": {
            "name": name,
            "trainable": True,
            "dtype": "float32",
            "function": [code, None, None],
            "function_type": "lambda",
            "module": "__main__",
            "output_shape": None,
            "output_shape_type": "raw",
            "output_shape_module": None,
            "arguments": {},
        },
    }


def dense_entry(name):
    return {
        "class_name": "Dense",
        "config": {"name": name, "trainable": True, "dtype": "float32", "units": 2, "activation": "linear"},
    }


def tfop_entry(fn):
    return {
        "class_name": "TFOpLambda",
        "config": {"name": "tf." + fn, "trainable": True, "dtype": "float32", "function": fn},
    }


def keras2_config(layers):
    return {"class_name": "Sequential", "config": {"name": "sequential", "layers": layers}}


def write_keras2_h5(name, cfg, manifest, raw=None):
    path = os.path.join(HERE, name)
    with h5py.File(path, "w") as f:
        f.attrs["keras_version"] = np.bytes_(b"2.12.0")
        f.attrs["backend"] = np.bytes_(b"tensorflow")
        text = raw if raw is not None else (json.dumps(cfg) if cfg is not None else None)
        if text is not None:
            f.attrs["model_config"] = np.bytes_(text.encode("utf-8"))
        f.create_group("model_weights")
    if cfg is not None:
        manifest[name] = {"layers": layer_names(cfg), "saver": "h5py " + h5py.__version__}


def saved_metadata_class():
    fdp = descriptor_pb2.FileDescriptorProto(name="saved_metadata_fixture.proto", package="fixture", syntax="proto3")
    ver = fdp.message_type.add(name="VersionDef")
    ver.field.add(name="producer", number=1, type=5, label=1)
    ver.field.add(name="min_consumer", number=2, type=5, label=1)
    obj = fdp.message_type.add(name="SavedObject")
    obj.field.add(name="node_id", number=2, type=5, label=1)
    obj.field.add(name="node_path", number=3, type=9, label=1)
    obj.field.add(name="identifier", number=4, type=9, label=1)
    obj.field.add(name="metadata", number=5, type=9, label=1)
    obj.field.add(name="version", number=6, type=11, label=1, type_name=".fixture.VersionDef")
    meta = fdp.message_type.add(name="SavedMetadata")
    meta.field.add(name="nodes", number=1, type=11, label=3, type_name=".fixture.SavedObject")
    pool = descriptor_pool.DescriptorPool()
    pool.Add(fdp)
    return message_factory.GetMessageClass(pool.FindMessageTypeByName("fixture.SavedMetadata"))


def write_metadata_pb(manifest):
    cls = saved_metadata_class()
    msg = cls()
    layers = [dense_entry("dense"), lambda_entry("lam", marker)]
    root = msg.nodes.add(node_id=0, node_path="root", identifier="_tf_keras_sequential")
    root.metadata = json.dumps({"name": "sequential", "class_name": "Sequential", "config": keras2_config(layers)["config"]})
    root.version.producer = 1
    for i, l in enumerate(layers, start=1):
        n = msg.nodes.add(node_id=i, node_path="root.layer-%d" % (i - 1), identifier="_tf_keras_layer")
        n.metadata = json.dumps({"name": l["config"]["name"], "class_name": l["class_name"], "config": l["config"]})
        n.version.producer = 1
    data = msg.SerializeToString()
    with open(os.path.join(HERE, "keras_metadata.pb"), "wb") as f:
        f.write(data)
    manifest["keras_metadata.pb"] = {"layers": ["Dense", "Lambda"], "identifiers": [n.identifier for n in msg.nodes]}


class ReadModule(tf.Module):
    @tf.function(input_signature=[tf.TensorSpec([], tf.string)], autograph=False)
    def read(self, path):
        return tf.io.read_file(path)


def write_saved_model(manifest):
    tmp = os.path.join(HERE, "_sm_tmp")
    shutil.rmtree(tmp, ignore_errors=True)
    tf.saved_model.save(ReadModule(), tmp)
    shutil.copy(os.path.join(tmp, "saved_model.pb"), os.path.join(HERE, "read_file_saved_model.pb"))
    shutil.rmtree(tmp)
    manifest["read_file_saved_model.pb"] = {"layers": [], "ops": ["ReadFile"], "saver": "tensorflow " + tf.__version__}


ALG1_CASES = {
    "no_lambda": [dense_entry("d1"), dense_entry("d2")],
    "one_lambda": [dense_entry("d1"), lambda_entry("lam", identity)],
    "two_lambda": [lambda_entry("lam_a", identity), lambda_entry("lam_b", marker)],
    "read_file": [dense_entry("d1"), tfop_entry("io.read_file")],
    "write_file": [tfop_entry("io.write_file"), dense_entry("d1")],
    "both": [tfop_entry("io.read_file"), lambda_entry("lam", identity), tfop_entry("io.write_file")],
}
RISKY = ["tf.io.read_file", "tf.io.write_file"]


def write_alg1(manifest):
    outdir = os.path.join(HERE, "alg1")
    os.makedirs(outdir, exist_ok=True)
    expected = {}
    for name, layers in ALG1_CASES.items():
        cfg = keras2_config(layers)
        with open(os.path.join(outdir, name + ".json"), "w") as f:
            json.dump(cfg, f, indent=1)
        # Reference behaviour: flag on any Lambda, substring test of each
        # risky op against each layer's JSON text.
        texts = [json.dumps(l) for l in layers]
        expected[name] = {
            "has_lambda": any(l["class_name"] == "Lambda" for l in layers),
            "lambda_count": sum(l["class_name"] == "Lambda" for l in layers),
            "ops": sorted({op for op in RISKY for t in texts if op in t}),
        }
    with open(os.path.join(outdir, "expected.json"), "w") as f:
        json.dump(expected, f, indent=1, sort_keys=True)


def main():
    keras.utils.set_random_seed(0)
    manifest = {}
    save_real("dense_only.h5", keras_model([keras.layers.Dense(2, name="dense")]), manifest)
    lam = keras_model([keras.layers.Dense(2, name="dense"), keras.layers.Lambda(marker, name="lam")])
    save_real("lambda.h5", lam, manifest)
    save_real("lambda.keras", lam, manifest)
    save_real("two_lambda.keras", keras_model([keras.layers.Lambda(identity, name="lam_a"),
                                                keras.layers.Lambda(marker, name="lam_b")]), manifest)
    save_real("three_dense.keras", keras_model([keras.layers.Dense(3, name="a"), keras.layers.Dense(2, name="b"),
                                                 keras.layers.Dense(1, name="c")]), manifest)
    inp = keras.Input((4,))
    inner = keras.Sequential([keras.layers.Lambda(marker, name="inner_lam")], name="inner")
    save_real("nested.keras", keras.Model(inp, keras.layers.Dense(1, name="head")(inner(inp))), manifest)

    with zipfile.ZipFile(os.path.join(HERE, "empty_layers.keras"), "w") as z:
        z.writestr("metadata.json", json.dumps({"keras_version": keras.__version__}))
        z.writestr("config.json", json.dumps({"class_name": "Sequential", "config": {"name": "s", "layers": []}}))
    manifest["empty_layers.keras"] = {"layers": []}
    with zipfile.ZipFile(os.path.join(HERE, "no_config.keras"), "w") as z:
        z.writestr("metadata.json", "{}")

    write_keras2_h5("keras2_lambda.h5", keras2_config([dense_entry("dense"), lambda_entry("lam", marker)]), manifest)
    write_keras2_h5("keras2_read_file.h5", keras2_config([dense_entry("dense"), tfop_entry("io.read_file")]), manifest)
    write_keras2_h5("no_model_config.h5", None, manifest, raw=None)
    write_keras2_h5("bad_json.h5", None, manifest, raw="{\"class_name\": ")

    write_metadata_pb(manifest)
    write_saved_model(manifest)
    write_alg1(manifest)

    index = {
        "python": "%d.%d" % sys.version_info[:2],
        "keras_version": keras.__version__,
        "marker_strings": code_strings(marker.__code__),
        "identity_strings": code_strings(identity.__code__),
        "models": manifest,
    }
    with open(os.path.join(HERE, "index.json"), "w") as f:
        json.dump(index, f, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
