#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "hubscan/ingest/zip_reader.hpp"
#include "hubscan/keras/lambda.hpp"
#include "hubscan/keras/model.hpp"
#include "hubscan/pickle/analysis.hpp"
#include "hubscan/pipeline/pipeline.hpp"
#include "hubscan/python/ast.hpp"
#include "hubscan/script/analyzer.hpp"
#include "hubscan/taint/engine.hpp"

namespace hubscan::pipeline {

namespace {

using ingest::FormatKind;

// Globals a plain PyTorch or scikit-style checkpoint needs to rebuild tensors.
bool is_benign_global(std::string_view ref) {
  const auto sp = ref.find(' ');
  if (sp == std::string_view::npos) return false;
  const auto mod = ref.substr(0, sp);
  const auto name = ref.substr(sp + 1);
  if (mod == "collections" && name == "OrderedDict") return true;
  if (mod == "torch._utils" && name.starts_with("_rebuild_")) return true;
  if (mod == "torch" && (name.ends_with("Storage") || name == "Size" || name == "device")) return true;
  if (mod == "numpy.core.multiarray" && (name == "_reconstruct" || name == "scalar")) return true;
  if (mod == "numpy" && (name == "ndarray" || name == "dtype")) return true;
  if (mod == "_codecs" && name == "encode") return true;
  return false;
}

bool is_code_executor(std::string_view callee) {
  return callee == "builtins.exec" || callee == "builtins.eval" || callee == "builtins.compile" ||
         callee == "runpy._run_code";
}

bool is_command_executor(std::string_view callee) {
  return callee == "os.system" || callee == "posix.system" || callee == "nt.system" || callee == "os.popen" ||
         callee.starts_with("subprocess.");
}

// Names whose presence in a Lambda's code object means it can run code.
bool is_dangerous_name(std::string_view s) {
  static constexpr std::array<std::string_view, 11> kNames{
      "exec", "eval", "compile", "__import__", "system", "popen", "_run_code", "check_output", "Popen", "getoutput",
      "run_path"};
  return std::find(kNames.begin(), kNames.end(), s) != kNames.end();
}

std::string py_literal(std::string_view s) {
  std::string out = "'";
  static constexpr char kHex[] = "0123456789abcdef";
  for (unsigned char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20 || c == 0x7f) {
          out += "\\x";
          out += kHex[c >> 4];
          out += kHex[c & 15];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out + "'";
}

// echo/sleep/true/printf with plain words only.
bool inert_shell(std::string_view cmd) {
  if (cmd.find_first_of(";&|`$<>()\n\r") != std::string_view::npos) return false;
  const auto b = cmd.find_first_not_of(" \t");
  if (b == std::string_view::npos) return false;
  const auto word = cmd.substr(b, cmd.find_first_of(" \t", b) - b);
  return word == "echo" || word == "sleep" || word == "true" || word == "printf" || word == ":";
}

// Code that calls only print or time.sleep and touches no table API.
std::optional<bool> inert_python(std::string_view code, const script::ApiTable& table) {
  const auto ast = python::parse_python(code);
  if (ast.degraded()) return std::nullopt;
  const auto imports = script::collect_imports(ast);
  std::map<const python::Node*, std::string> callee;
  for (const auto& r : script::resolve_references(ast, imports, table)) {
    if (r.call && r.call->kid(0) == r.node) callee[r.call] = r.path;
  }
  std::size_t calls = 0;
  bool ok = true;
  python::walk(*ast.root, [&](const python::Node& n) {
    if (n.kind != python::NodeKind::Call) return true;
    ++calls;
    const auto it = callee.find(&n);
    if (it == callee.end() || (it->second != "print" && it->second != "time.sleep")) ok = false;
    return true;
  });
  if (calls == 0) return std::nullopt;
  for (const auto& f : script::find_unsafe_api_calls(ast, imports, table)) {
    if (f.severity > Severity::Info) ok = false;
  }
  return ok;
}

std::vector<std::size_t> line_starts(std::string_view s) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n') starts.push_back(i + 1);
  }
  return starts;
}

std::string line_text(std::string_view s, const std::vector<std::size_t>& starts, int line) {
  if (line < 1 || static_cast<std::size_t>(line) > starts.size()) return {};
  const auto b = starts[line - 1];
  const auto e = s.find('\n', b);
  return std::string(s.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
}

class Scanner {
 public:
  Scanner(const ArtifactRef& ref, const ScanConfig& cfg) : ref_(ref), cfg_(cfg) {}

  ArtifactResult run(ByteView bytes) {
    try {
      dispatch(bytes);
    } catch (const std::exception& e) {
      degrade(ref_.rel_path, stage_, std::nullopt, e.what());
    }
    return std::move(out_);
  }

 private:
  void dispatch(ByteView bytes) {
    const auto kind = ref_.format.kind;
    if (ingest::classify_vulnerability(ref_.format) == ingest::VulnClass::Safe) {
      out_.notes.push_back(ref_.rel_path + ": " + std::string(ingest::format_name(kind)) + " cannot carry code; skipped");
      return;
    }
    switch (kind) {
      case FormatKind::PickleRaw:
      case FormatKind::Joblib:
      case FormatKind::Dill:
      case FormatKind::CloudPickle:
        scan_pickle(bytes, ref_.rel_path, false);
        return;
      case FormatKind::PyTorchZip:
        scan_torch_zip(bytes);
        break;
      case FormatKind::Hdf5Keras:
      case FormatKind::KerasZip:
      case FormatKind::SavedModel:
        scan_keras(bytes);
        break;
      case FormatKind::PythonScript:
        scan_script(bytes);
        break;
      default:
        break;
    }
    stage_ = "rules";
    rule_scan(bytes, ref_.rel_path, "file", true, std::nullopt, "");
  }

  Finding& add(FindingKind kind, Severity sev, const std::string& path) {
    auto& f = out_.findings.emplace_back();
    f.kind = kind;
    f.severity = sev;
    f.path = path;
    return f;
  }

  void degrade(const std::string& path, std::string_view stage, std::optional<std::size_t> offset,
               const std::string& what, Severity sev = Severity::Low) {
    auto& f = add(FindingKind::ParserDegradation, sev, path);
    f.category = std::string(stage);
    f.offset = offset;
    f.detail = what;
  }

  // `located` puts the first match offset on the finding; otherwise `offset` is used.
  void rule_scan(ByteView data, const std::string& path, std::string_view target, bool located,
                 std::optional<std::size_t> offset, const std::string& where) {
    for (const auto& rule : cfg_.rules.rules) {
      auto m = rules::match(rule, data, target);
      if (!m) continue;
      auto& f = add(FindingKind::RuleMatch, m->severity, path);
      f.rule = m->rule_name;
      f.category = m->taint_source_category;
      std::size_t first = data.size();
      std::string ids;
      for (const auto& sm : m->matched) {
        if (!sm.offsets.empty()) first = std::min(first, sm.offsets.front());
        ids += (ids.empty() ? "" : ", ") + sm.id;
      }
      f.offset = located ? std::optional<std::size_t>(first) : offset;
      if (first < data.size()) {
        f.snippet = script::make_snippet(utf8_lossy(data.subspan(first, std::min<std::size_t>(80, data.size() - first))));
      }
      f.detail = "matched " + ids + (where.empty() ? "" : " in " + where);
    }
  }

  void flow_finding(const taint::TaintFlow& flow, const std::string& path, std::optional<std::size_t> offset,
                    std::string_view source_text, const std::string& where) {
    auto& f = add(FindingKind::TaintFlow, Severity::High, path);
    f.category = std::string(taint::threat_category_name(flow.category));
    f.api = flow.sink.name;
    f.source = flow.source.name;
    f.line = flow.sink.loc.line;
    f.offset = offset;
    f.snippet = script::make_snippet(line_text(source_text, line_starts(source_text), flow.sink.loc.line));
    f.detail = flow.source.name + " (line " + std::to_string(flow.source.loc.line) + ") reaches " + flow.sink.name +
               " (line " + std::to_string(flow.sink.loc.line) + "), " + std::to_string(flow.path.size()) +
               " nodes, confidence " + std::string(taint::confidence_name(flow.confidence)) +
               (where.empty() ? "" : ", " + where);
  }

  // Snippet payloads: code strings are parsed as Python; command and other
  // callee arguments are wrapped into an equivalent one-line call.
  void analyse_payload(const pickle::SuspiciousSnippet& s, const std::string& path) {
    std::string code;
    bool is_code = is_code_executor(s.callee);
    if (is_code) {
      if (s.arg_strings.empty()) return;
      code = s.arg_strings.front();
    } else {
      const auto dot = s.callee.rfind('.');
      if (s.arg_strings.empty() || dot == std::string::npos || s.callee.starts_with("builtins.") ||
          s.callee == "operator.attrgetter") {
        return;
      }
      auto mod = s.callee.substr(0, dot);
      if (mod == "posix" || mod == "nt") mod = "os";
      code = "import " + mod + "\n" + mod + "." + s.callee.substr(dot + 1) + "(";
      for (std::size_t i = 0; i < s.arg_strings.size(); ++i) code += (i ? ", " : "") + py_literal(s.arg_strings[i]);
      code += ")\n";
    }
    stage_ = "snippet.script";
    const auto ast = python::parse_python(code);
    if (ast.degraded()) return;
    const std::string where = "payload of " + s.callee + " at offset " + std::to_string(s.source_offset);
    if (is_code) {
      const auto imports = script::collect_imports(ast);
      for (const auto& u : script::find_unsafe_api_calls(ast, imports, cfg_.api_table)) {
        auto& f = add(FindingKind::UnsafeApi, u.severity, path);
        f.api = u.api;
        f.category = std::string(script::api_category_name(u.category));
        f.line = u.line;
        f.offset = s.source_offset;
        f.snippet = u.call_snippet;
        f.detail = where;
      }
    }
    stage_ = "snippet.taint";
    const auto st = taint::analyze_script(ast, cfg_.taint, cfg_.rules.rules, cfg_.api_table);
    for (const auto& flow : st.flows) flow_finding(flow, path, s.source_offset, ast.source, where);
  }

  bool snippet_inert(const pickle::SuspiciousSnippet& s) const {
    if (s.callee == "builtins.print" || s.callee == "time.sleep") return true;
    if (s.arg_strings.empty() || s.non_string_args > 0) return false;
    if (is_code_executor(s.callee)) {
      return std::all_of(s.arg_strings.begin(), s.arg_strings.end(),
                         [&](const std::string& a) { return inert_python(a, cfg_.api_table).value_or(false); });
    }
    if (is_command_executor(s.callee)) return std::all_of(s.arg_strings.begin(), s.arg_strings.end(), inert_shell);
    return false;
  }

  void scan_pickle(ByteView bytes, const std::string& path, bool in_torch_zip) {
    stage_ = "pickle.disassemble";
    pickle::Disassembly d;
    try {
      d = pickle::disassemble(bytes);
    } catch (const pickle::DisassemblyError& e) {
      degrade(path, stage_, e.offset(), e.what());
      rule_scan(bytes, path, "file", true, std::nullopt, "");
      return;
    }
    if (d.trailing_bytes > 0) out_.notes.push_back(path + ": " + std::to_string(d.trailing_bytes) + " bytes after STOP");

    stage_ = "pickle.lift";
    std::optional<pickle::LiftResult> lifted;
    std::vector<std::string> refs;
    try {
      lifted = pickle::lift(d.instructions);
      refs = pickle::symbol_refs(*lifted);
    } catch (const pickle::LiftError& e) {
      degrade(path, stage_, e.offset(), e.what());
    }
    const bool benign = lifted && std::all_of(refs.begin(), refs.end(), is_benign_global);

    stage_ = "pickle.opcodes";
    struct Group {
      std::size_t count = 0;
      std::size_t first = 0;
      std::string_view description;
    };
    std::map<pickle::Opcode, Group> groups;
    for (const auto& h : pickle::find_unsafe_opcodes(d.instructions)) {
      auto& g = groups[h.opcode_class];
      if (g.count++ == 0) {
        g.first = h.instruction.offset;
        g.description = h.description;
      }
    }
    std::string globals;
    for (std::size_t i = 0; i < refs.size() && i < 8; ++i) globals += (i ? ", " : "") + refs[i];
    if (refs.size() > 8) globals += ", ...";
    for (const auto& [op, g] : groups) {
      auto& f = add(FindingKind::UnsafeOpcode, benign ? Severity::Info : Severity::Low, path);
      f.category = std::string(pickle::opcode_info(op).name);
      f.offset = g.first;
      f.detail = std::string(g.description) + "; " + std::to_string(g.count) + " occurrence(s)" +
                 (globals.empty() ? "" : "; globals: " + globals);
    }
    std::map<pickle::Opcode, Group> persid;
    for (const auto& in : d.instructions) {
      if (in.opcode != pickle::Opcode::PERSID && in.opcode != pickle::Opcode::BINPERSID) continue;
      auto& g = persid[in.opcode];
      if (g.count++ == 0) g.first = in.offset;
    }
    for (const auto& [op, g] : persid) {
      auto& f = add(FindingKind::UnsafeOpcode, in_torch_zip ? Severity::Info : Severity::Low, path);
      f.category = std::string(pickle::opcode_info(op).name);
      f.offset = g.first;
      f.detail = "persistent id resolved by the loader; " + std::to_string(g.count) + " occurrence(s)";
    }

    if (lifted) {
      stage_ = "pickle.snippets";
      for (const auto& s : pickle::extract_snippets(*lifted)) {
        const bool weak = s.callee == "builtins.getattr";
        auto& f = add(FindingKind::SuspiciousSnippet, weak ? Severity::Info : Severity::High, path);
        f.api = s.callee;
        f.offset = s.source_offset;
        std::string call = s.callee + "(";
        for (std::size_t i = 0; i < s.arg_strings.size(); ++i) call += (i ? ", " : "") + py_literal(s.arg_strings[i]);
        if (s.non_string_args) {
          call += std::string(s.arg_strings.empty() ? "" : ", ") + "<" + std::to_string(s.non_string_args) +
                  " non-literal>";
        }
        f.snippet = script::make_snippet(call + ")");
        f.inert = snippet_inert(s);
        f.detail = "call reached on load";
        for (const auto& a : s.arg_strings) {
          rule_scan(as_bytes(a), path, "snippet", false, s.source_offset, "argument of " + s.callee);
        }
        analyse_payload(s, path);
      }
    }
    stage_ = "rules";
    rule_scan(bytes, path, "file", true, std::nullopt, "");
  }

  void scan_torch_zip(ByteView bytes) {
    stage_ = "zip";
    std::vector<ingest::ArchiveEntry> members;
    try {
      members = ingest::extract_pickle_members(bytes);
    } catch (const ingest::ZipError& e) {
      degrade(ref_.rel_path, stage_, std::nullopt, e.what());
      return;
    }
    if (members.empty()) out_.notes.push_back(ref_.rel_path + ": archive has no pickle member");
    for (const auto& m : members) scan_pickle(m.bytes, ref_.rel_path + ":" + m.path, true);
  }

  void scan_keras(ByteView bytes) {
    keras::KerasModel model;
    std::vector<std::string> raw_strings;
    const auto kind = ref_.format.kind;
    if (kind == FormatKind::SavedModel) {
      stage_ = "keras.saved_model";
      auto sm = keras::scan_saved_model_detailed(bytes);
      if (sm.degraded) degrade(ref_.rel_path, stage_, sm.error_offset, "malformed protobuf, raw scan: " + sm.error);
      model.layers = std::move(sm.layers);
      raw_strings = std::move(sm.strings);
    } else {
      stage_ = kind == FormatKind::Hdf5Keras ? "keras.h5" : "keras.zip";
      try {
        model = kind == FormatKind::Hdf5Keras ? keras::load_h5_model(bytes) : keras::load_keras_zip(bytes);
      } catch (const keras::KerasError& e) {
        // Weights-only files have no architecture to inspect.
        const bool weights_only = e.code() == keras::KerasErrorCode::MissingModelConfig;
        degrade(ref_.rel_path, stage_, std::nullopt,
                std::string(keras::keras_error_name(e.code())) + ": " + e.what(),
                weights_only ? Severity::Info : Severity::Low);
        return;
      }
    }
    for (const auto& n : model.notes) out_.notes.push_back(ref_.rel_path + ": " + n);

    stage_ = "keras.lambda";
    const auto lf = keras::detect_lambda(model.layers);
    for (std::size_t i = 0; i < lf.lambdas.size(); ++i) {
      const auto& l = lf.lambdas[i];
      const bool dangerous = std::any_of(l.embedded_strings.begin(), l.embedded_strings.end(),
                                         [](const std::string& s) { return is_dangerous_name(s); });
      auto& f = add(FindingKind::LambdaLayer, dangerous ? Severity::High : Severity::Medium, ref_.rel_path);
      f.category = l.payload_key;
      std::string strings;
      for (const auto& s : l.embedded_strings) strings += (strings.empty() ? "" : ", ") + s;
      f.snippet = script::make_snippet(strings);
      if (l.error) {
        f.detail = "Lambda layer '" + l.layer_name + "': opaque Lambda payload: " + l.error_detail;
      } else {
        f.detail = "Lambda layer '" + l.layer_name + "', marshal layout " +
                   std::string(keras::marshal_layout_name(l.layout));
      }
      // Inert when every string that parses as code with a call only prints or sleeps.
      std::size_t code_strings = 0;
      bool inert = true;
      for (const auto& s : l.embedded_strings) {
        if (s.find('(') == std::string::npos) continue;
        const auto r = inert_python(s, cfg_.api_table);
        if (!r) continue;
        ++code_strings;
        inert = inert && *r;
      }
      f.inert = !l.error && code_strings > 0 && inert;

      if (l.bytecode && !l.bytecode->empty()) {
        const auto v = cfg_.pyc_version.value_or(keras::default_python_version(l.layout));
        try {
          out_.side_artifacts.push_back(
              {ref_.rel_path + ".lambda" + std::to_string(i) + ".pyc", keras::pyc_image(*l.bytecode, v)});
        } catch (const Error& e) {
          out_.notes.push_back(ref_.rel_path + ": no .pyc for Lambda '" + l.layer_name + "': " + e.what());
        }
      }
      for (const auto& s : l.embedded_strings) {
        rule_scan(as_bytes(s), ref_.rel_path, "lambda", false, std::nullopt, "Lambda layer '" + l.layer_name + "'");
      }
    }

    stage_ = "keras.operators";
    for (const auto& op : keras::check_unsafe_operators(model.layers, raw_strings, cfg_.risky_ops).ops) {
      auto& f = add(FindingKind::UnsafeOperator, Severity::Medium, ref_.rel_path);
      f.api = op;
      f.detail = "risky operator in the model graph";
    }
  }

  void scan_script(ByteView bytes) {
    stage_ = "script.parse";
    const auto ast = python::parse_python(as_chars(bytes));
    const auto starts = line_starts(ast.source);
    auto offset_of = [&](int line, int col) -> std::optional<std::size_t> {
      if (line < 1 || static_cast<std::size_t>(line) > starts.size()) return std::nullopt;
      return starts[line - 1] + static_cast<std::size_t>(std::max(col, 1) - 1);
    };
    if (ast.degraded()) {
      degrade(ref_.rel_path, stage_, offset_of(ast.error->loc.line, ast.error->loc.column),
              "syntax error, regex scan only: " + ast.error->message, Severity::Info);
    }
    stage_ = "script.apis";
    const auto imports = script::collect_imports(ast);
    for (const auto& u : script::find_unsafe_api_calls(ast, imports, cfg_.api_table)) {
      auto& f = add(FindingKind::UnsafeApi, u.severity, ref_.rel_path);
      f.api = u.api;
      f.category = std::string(script::api_category_name(u.category));
      f.line = u.line;
      f.offset = offset_of(u.line, u.column);
      f.snippet = u.call_snippet;
      f.detail = u.degraded ? "regex scan" : "resolved call";
    }
    stage_ = "script.taint";
    const auto st = taint::analyze_script(ast, cfg_.taint, cfg_.rules.rules, cfg_.api_table);
    for (const auto& flow : st.flows) {
      flow_finding(flow, ref_.rel_path, offset_of(flow.sink.loc.line, flow.sink.loc.column), ast.source, "");
    }
  }

  const ArtifactRef& ref_;
  const ScanConfig& cfg_;
  ArtifactResult out_;
  std::string stage_ = "dispatch";
};

}  // namespace

ArtifactResult scan_artifact(const ArtifactRef& ref, ByteView bytes, const ScanConfig& config) {
  return Scanner(ref, config).run(bytes);
}

}  // namespace hubscan::pipeline
