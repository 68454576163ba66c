#include <boost/regex.hpp>

#include <algorithm>
#include <set>
#include <string>
#include <tuple>

#include "imports.hpp"

namespace hubscan::script {

namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '(')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == ')' || s.back() == '\\' ||
          s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <class Fn>
void for_each_item(std::string_view list, Fn fn) {
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    const auto item = strip(list.substr(pos, comma - pos));
    if (!item.empty()) fn(item);
    pos = comma + 1;
  }
}

// Replaces comment text and string-literal contents with spaces so the
// dotted-name scan only sees code. Offsets and newlines are preserved.
std::string mask_code(std::string_view src) {
  std::string out(src);
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') out[i++] = ' ';
      continue;
    }
    if (c != '\'' && c != '"') {
      ++i;
      continue;
    }
    const bool triple = i + 2 < src.size() && src[i + 1] == c && src[i + 2] == c;
    const std::size_t q = triple ? 3 : 1;
    std::size_t j = i + q;
    while (j < src.size()) {
      if (src[j] == '\\') {
        j += 2;
        continue;
      }
      if (!triple && src[j] == '\n') break;
      if (src[j] == c && (!triple || (j + 2 < src.size() && src[j + 1] == c && src[j + 2] == c))) break;
      ++j;
    }
    const auto close = std::min(j, src.size());
    for (std::size_t k = i + q; k < close; ++k) {
      if (out[k] != '\n') out[k] = ' ';
    }
    i = std::min(src.size(), close + (close < src.size() && src[close] != '\n' ? q : 0));
  }
  return out;
}

const boost::regex& import_re() {
  static const boost::regex re(R"(^[ \t]*import[ \t]+([^#;\r\n]+))");
  return re;
}

const boost::regex& from_re() {
  static const boost::regex re(R"(^[ \t]*from[ \t]+(\.*[\w.]*)[ \t]+import[ \t]+([^#;\r\n]+))");
  return re;
}

const boost::regex& alias_re() {
  static const boost::regex re(R"(^([\w.]+)(?:[ \t]+as[ \t]+(\w+))?$)");
  return re;
}

const boost::regex& chain_re() {
  static const boost::regex re(R"((?<![\w.])[A-Za-z_]\w*(?:[ \t]*\.[ \t]*[A-Za-z_]\w*)*)");
  return re;
}

}  // namespace

namespace detail {

ImportMap scan_import_lines(std::string_view source) {
  ImportMap map;
  const std::string masked = mask_code(source);
  boost::smatch m;
  std::size_t pos = 0;
  while (pos <= masked.size()) {
    auto nl = masked.find('\n', pos);
    if (nl == std::string::npos) nl = masked.size();
    const std::string line = masked.substr(pos, nl - pos);
    pos = nl + 1;
    if (boost::regex_search(line, m, from_re())) {
      const std::string module = m[1];
      const std::string names = m[2];
      if (module.empty()) continue;
      for_each_item(names, [&](std::string_view item) {
        if (item == "*") {
          if (std::find(map.star_imports.begin(), map.star_imports.end(), module) ==
              map.star_imports.end()) {
            map.star_imports.push_back(module);
          }
          return;
        }
        boost::match_results<std::string_view::const_iterator> a;
        if (!boost::regex_match(item.begin(), item.end(), a, alias_re())) return;
        const std::string name = a[1];
        const std::string local = a[2].matched ? std::string(a[2]) : name;
        map.aliases[local] = module.back() == '.' ? module + name : module + "." + name;
      });
    } else if (boost::regex_search(line, m, import_re())) {
      const std::string names = m[1];
      for_each_item(names, [&](std::string_view item) {
        boost::match_results<std::string_view::const_iterator> a;
        if (!boost::regex_match(item.begin(), item.end(), a, alias_re())) return;
        const std::string name = a[1];
        if (a[2].matched) {
          map.aliases[a[2]] = name;
        } else {
          const auto top = name.substr(0, name.find('.'));
          map.aliases[top] = top;
        }
      });
    }
  }
  return map;
}

}  // namespace detail

std::vector<UnsafeApiFinding> regex_scan(std::string_view source, const ApiTable& table) {
  const ImportMap imports = detail::scan_import_lines(source);
  std::string masked = mask_code(source);
  // Import statements bind names; they are not references.
  {
    std::size_t pos = 0;
    while (pos < masked.size()) {
      auto nl = masked.find('\n', pos);
      if (nl == std::string::npos) nl = masked.size();
      const std::string line = masked.substr(pos, nl - pos);
      if (boost::regex_search(line, from_re()) || boost::regex_search(line, import_re())) {
        std::fill(masked.begin() + static_cast<std::ptrdiff_t>(pos), masked.begin() + static_cast<std::ptrdiff_t>(nl), ' ');
      }
      pos = nl + 1;
    }
  }

  std::vector<std::size_t> line_starts{0};
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == '\n') line_starts.push_back(i + 1);
  }

  std::vector<UnsafeApiFinding> out;
  std::set<std::tuple<std::string, int, int>> seen;
  for (boost::sregex_iterator it(masked.begin(), masked.end(), chain_re()), end; it != end; ++it) {
    const auto offset = static_cast<std::size_t>(it->position());
    std::vector<std::string> parts;
    std::string cur;
    for (const char c : it->str()) {
      if (c == '.') {
        parts.push_back(cur);
        cur.clear();
      } else if (c != ' ' && c != '\t') {
        cur.push_back(c);
      }
    }
    parts.push_back(cur);

    std::string path;
    if (auto p = imports.lookup(parts[0])) {
      path = *p;
    } else {
      for (const auto& m : imports.star_imports) {
        if (table.match(m + "." + parts[0])) {
          path = m + "." + parts[0];
          break;
        }
      }
      if (path.empty() && (parts[0] == "builtins" || parts[0] == "__builtins__" || table.match(parts[0]))) {
        path = parts[0];
      }
    }
    if (path.empty()) continue;

    const auto line_it = std::upper_bound(line_starts.begin(), line_starts.end(), offset) - 1;
    const int line = static_cast<int>(line_it - line_starts.begin()) + 1;
    const int column = static_cast<int>(offset - *line_it) + 1;
    const auto eol = source.find('\n', offset);
    const auto snippet = source.substr(offset, eol == std::string_view::npos ? std::string_view::npos : eol - offset);

    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k > 0) path += "." + parts[k];
      const auto canon = canonicalize(path);
      const ApiEntry* e = table.match(canon);
      if (!e || !seen.emplace(canon, line, column).second) continue;
      UnsafeApiFinding f;
      f.api = canon;
      f.category = e->category;
      f.severity = e->severity;
      f.line = line;
      f.column = column;
      f.call_snippet = make_snippet(snippet);
      f.degraded = true;
      out.push_back(std::move(f));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.line, a.column, a.api) < std::tie(b.line, b.column, b.api);
  });
  return out;
}

}  // namespace hubscan::script
