#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "hubscan/common.hpp"

namespace testsupport {

// Composes random well-formed pickle streams. With allow_unsafe=false only
// literal, container, memo and stack-shuffling opcodes are emitted.
class PickleGen {
 public:
  PickleGen(std::uint64_t seed, bool allow_unsafe) : rng_(seed), unsafe_(allow_unsafe) {}

  hubscan::Bytes stream() {
    out_.clear();
    memo_count_ = 0;
    proto_ = pick(0, 5);
    hubscan::Bytes body;
    std::swap(out_, body);
    value(0);
    std::swap(out_, body);
    if (proto_ >= 2) {
      out_.push_back(0x80);
      out_.push_back(static_cast<std::uint8_t>(proto_));
    }
    if (proto_ >= 4 && coin()) {
      out_.push_back(0x95);
      le(body.size() + 1, 8);
    }
    out_.insert(out_.end(), body.begin(), body.end());
    out_.push_back('.');
    return out_;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(int percent = 50) { return pick(0, 99) < percent; }

  void byte(int b) { out_.push_back(static_cast<std::uint8_t>(b)); }
  void text(const std::string& s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) byte(static_cast<int>((v >> (8 * i)) & 0xFF));
  }

  std::string ident() {
    static const char* kWords[] = {"os", "system", "collections", "OrderedDict", "numpy", "array", "x", "mod_1"};
    return kWords[pick(0, 7)];
  }

  std::string ascii(int max_len) {
    std::string s;
    const int n = pick(0, max_len);
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>(pick('a', 'z')));
    return s;
  }

  void string_value() {
    const auto s = ascii(12);
    switch (pick(0, 4)) {
      case 0:
        if (proto_ >= 4) {
          byte(0x8c);
          byte(static_cast<int>(s.size()));
          text(s);
          return;
        }
        [[fallthrough]];
      case 1:
        byte('X');
        le(s.size(), 4);
        text(s);
        return;
      case 2:
        byte('V');
        text(s + "\n");
        return;
      case 3:
        byte('S');
        text("'" + s + "'\n");
        return;
      default:
        byte('U');
        byte(static_cast<int>(s.size()));
        text(s);
        return;
    }
  }

  void int_value() {
    switch (pick(0, 5)) {
      case 0: byte('K'); byte(pick(0, 255)); return;
      case 1: byte('M'); le(static_cast<std::uint64_t>(pick(0, 65535)), 2); return;
      case 2: byte('J'); le(static_cast<std::uint32_t>(pick(-100000, 100000)), 4); return;
      case 3: text("I" + std::to_string(pick(-1000, 1000)) + "\n"); return;
      case 4:
        if (proto_ >= 2) {
          const int n = pick(0, 9);
          byte(0x8a);
          byte(n);
          for (int i = 0; i < n; ++i) byte(pick(0, 255));
          return;
        }
        [[fallthrough]];
      default: text("L" + std::to_string(pick(0, 1 << 30)) + "L\n"); return;
    }
  }

  void memo_put() {
    const int idx = memo_count_++;
    if (proto_ >= 4 && coin()) {
      byte(0x94);
    } else if (idx < 256 && coin(70)) {
      byte('q');
      byte(idx);
    } else {
      byte('r');
      le(static_cast<std::uint64_t>(idx), 4);
    }
  }

  void values(int depth, int max) {
    const int n = pick(0, max);
    for (int i = 0; i < n; ++i) value(depth + 1);
  }

  void unsafe_value(int depth) {
    const auto global = [&] {
      if (proto_ >= 4 && coin()) {
        const auto m = ident(), n = ident();
        byte(0x8c); byte(static_cast<int>(m.size())); text(m);
        byte(0x8c); byte(static_cast<int>(n.size())); text(n);
        byte(0x93);
      } else {
        text("c" + ident() + "\n" + ident() + "\n");
      }
    };
    switch (pick(0, 5)) {
      case 0: global(); return;
      case 1: global(); byte('('); values(depth, 2); byte('t'); byte('R'); break;
      case 2: byte('('); values(depth, 2); text("i" + ident() + "\n" + ident() + "\n"); break;
      case 3: byte('('); global(); values(depth, 2); byte('o'); break;
      case 4:
        if (proto_ >= 2) {
          global(); byte(')'); byte(0x81);
          break;
        }
        global();
        return;
      default:
        if (proto_ >= 4) {
          global(); byte(')'); byte('}'); byte(0x92);
          break;
        }
        global(); byte(')'); byte('R');
        break;
    }
    if (coin(30)) {
      byte('}');
      byte('b');
    }
  }

  void value(int depth) {
    const bool leaf = depth >= 4;
    const int choice = pick(0, leaf ? 6 : 12);
    if (unsafe_ && coin(15)) {
      unsafe_value(depth);
    } else {
      switch (choice) {
        case 0: byte('N'); break;
        case 1:
          if (proto_ >= 2) byte(coin() ? 0x88 : 0x89);
          else text(coin() ? "I01\n" : "I00\n");
          break;
        case 2: int_value(); break;
        case 3:
          if (coin()) {
            double d = std::uniform_real_distribution<double>(-1e6, 1e6)(rng_);
            std::uint64_t bits;
            std::memcpy(&bits, &d, 8);
            byte('G');
            for (int i = 7; i >= 0; --i) byte(static_cast<int>((bits >> (8 * i)) & 0xFF));
          } else {
            text("F" + std::to_string(pick(-500, 500)) + ".25\n");
          }
          break;
        case 4: string_value(); break;
        case 5:
          if (proto_ >= 3) {
            byte('C');
            byte(3);
            text("abc");
          } else {
            byte('N');
          }
          break;
        case 6:
          if (memo_count_ > 0) {
            const int idx = pick(0, memo_count_ - 1);
            if (idx < 256 && coin()) {
              byte('h');
              byte(idx);
            } else {
              byte('j');
              le(static_cast<std::uint64_t>(idx), 4);
            }
          } else {
            text("Ppid" + std::to_string(pick(0, 9)) + "\n");
          }
          break;
        case 7:
          byte(']');
          if (coin()) memo_put();
          if (coin()) {
            byte('(');
            values(depth, 3);
            byte('e');
          } else if (coin()) {
            value(depth + 1);
            byte('a');
          }
          break;
        case 8:
          if (coin()) {
            byte('(');
            values(depth, 3);
            byte(coin() ? 't' : 'l');
          } else if (proto_ >= 2) {
            const int n = pick(1, 3);
            for (int i = 0; i < n; ++i) value(depth + 1);
            byte(0x84 + n);
          } else {
            byte(')');
          }
          break;
        case 9: {
          byte('}');
          if (coin()) memo_put();
          const int n = pick(0, 2);
          if (coin()) {
            byte('(');
            for (int i = 0; i < n; ++i) {
              string_value();
              value(depth + 1);
            }
            byte('u');
          } else if (n > 0) {
            string_value();
            value(depth + 1);
            byte('s');
          }
          break;
        }
        case 10:
          byte('(');
          for (int i = pick(0, 2); i > 0; --i) {
            int_value();
            value(depth + 1);
          }
          byte('d');
          break;
        case 11:
          if (proto_ >= 4) {
            if (coin()) {
              byte(0x8f);
              byte('(');
              values(depth, 3);
              byte(0x90);
            } else {
              byte('(');
              values(depth, 3);
              byte(0x91);
            }
          } else {
            byte(')');
          }
          break;
        default:
          byte('(');
          value(depth + 1);
          byte('1');
          value(depth + 1);
          break;
      }
    }
    if (coin(20)) memo_put();
    if (coin(10)) {
      byte('2');
      byte('0');
    }
  }

  std::mt19937_64 rng_;
  bool unsafe_;
  int proto_ = 0;
  int memo_count_ = 0;
  hubscan::Bytes out_;
};

}  // namespace testsupport
