// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/topics.hpp"

namespace iotchain::broker {

std::vector<std::string> split_levels(std::string_view s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t slash = s.find('/', start);
    if (slash == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, slash - start));
    start = slash + 1;
  }
}

bool valid_topic_name(std::string_view topic) {
  if (topic.empty()) return false;
  for (char c : topic) {
    if (c == '+' || c == '#') return false;
  }
  return true;
}

bool valid_topic_filter(std::string_view filter) {
  if (filter.empty()) return false;
  auto levels = split_levels(filter);
  for (size_t i = 0; i < levels.size(); ++i) {
    const std::string& level = levels[i];
    if (level == "#") {
      if (i + 1 != levels.size()) return false;  // `#` only as last level
      continue;
    }
    if (level == "+") continue;
    for (char c : level) {
      if (c == '+' || c == '#') return false;  // wildcards occupy whole levels
    }
  }
  return true;
}

bool topic_match(std::string_view filter, std::string_view topic) {
  auto f = split_levels(filter);
  auto t = split_levels(topic);
  size_t i = 0;
  for (; i < f.size(); ++i) {
    if (f[i] == "#") return true;  // matches remainder and the parent level
    if (i >= t.size()) return false;
    if (f[i] == "+") continue;
    if (f[i] != t[i]) return false;
  }
  return i == t.size();
}

namespace {

bool subsumes_levels(const std::vector<std::string>& outer,
                     const std::vector<std::string>& inner, size_t i, size_t j) {
  if (i == outer.size() && j == inner.size()) return true;
  if (i == outer.size()) return false;  // inner reaches deeper topics
  if (outer[i] == "#") return true;
  if (j == inner.size()) return false;  // outer demands more levels
  if (inner[j] == "#") return false;    // only '#' covers '#', handled above
  if (inner[j] == "+") {
    return outer[i] == "+" && subsumes_levels(outer, inner, i + 1, j + 1);
  }
  if (outer[i] == "+" || outer[i] == inner[j]) {
    return subsumes_levels(outer, inner, i + 1, j + 1);
  }
  return false;
}

}  // namespace

bool filter_subsumes(std::string_view outer, std::string_view inner) {
  return subsumes_levels(split_levels(outer), split_levels(inner), 0, 0);
}

}  // namespace iotchain::broker
