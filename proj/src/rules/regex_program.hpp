#pragma once

#include <boost/regex.hpp>

#include "hubscan/rules/rules.hpp"

namespace hubscan::rules {

class RegexProgram {
 public:
  RegexProgram(const std::string& expr, bool icase, bool dotall)
      : re(expr, boost::regex::perl | boost::regex::no_mod_m | (icase ? boost::regex::icase : boost::regex::normal) |
                     (dotall ? boost::regex::mod_s : boost::regex::no_mod_s)) {}

  boost::regex re;
};

}  // namespace hubscan::rules
