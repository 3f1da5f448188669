// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include <doctest.h>

#include "iotchain/rng.hpp"
#include "iotchain/topics.hpp"

using namespace iotchain;
using namespace iotchain::broker;

namespace {

// Recursive-definition oracle for wildcard matching.
bool match_oracle(const std::vector<std::string>& f, size_t fi,
                  const std::vector<std::string>& t, size_t ti) {
  if (fi == f.size()) return ti == t.size();
  if (f[fi] == "#") return true;
  if (ti == t.size()) return false;
  if (f[fi] != "+" && f[fi] != t[ti]) return false;
  return match_oracle(f, fi + 1, t, ti + 1);
}

std::string random_topic(Rng& rng, bool wildcards) {
  static const std::vector<std::string> parts = {"a", "b", "c", "dev1"};
  size_t levels = 1 + rng.uniform(4);
  std::string out;
  for (size_t i = 0; i < levels; ++i) {
    if (i) out += "/";
    if (wildcards && rng.uniform(5) == 0) {
      out += (i + 1 == levels && rng.uniform(2) == 0) ? "#" : "+";
    } else {
      out += parts[rng.uniform(parts.size())];
    }
  }
  return out;
}

// Every concrete topic over {a,b} up to 3 levels.
std::vector<std::string> small_topics() {
  std::vector<std::string> out;
  const std::vector<std::string> alphabet = {"a", "b"};
  for (const auto& x : alphabet) {
    out.push_back(x);
    for (const auto& y : alphabet) {
      out.push_back(x + "/" + y);
      for (const auto& z : alphabet) {
        out.push_back(x + "/" + y + "/" + z);
      }
    }
  }
  return out;
}

std::vector<std::string> small_filters() {
  std::vector<std::string> out;
  const std::vector<std::string> alphabet = {"a", "b", "+"};
  for (const auto& x : alphabet) {
    out.push_back(x);
    out.push_back(x + "/#");
    for (const auto& y : alphabet) {
      out.push_back(x + "/" + y);
      out.push_back(x + "/" + y + "/#");
      for (const auto& z : alphabet) {
        out.push_back(x + "/" + y + "/" + z);
      }
    }
  }
  out.push_back("#");
  return out;
}

}  // namespace

TEST_CASE("basic wildcard matching") {
  CHECK(topic_match("sensors/+/temp", "sensors/dev1/temp"));
  CHECK_FALSE(topic_match("sensors/+/temp", "sensors/dev1/humidity"));
  CHECK(topic_match("sensors/#", "sensors"));  // trailing-# parent rule
  CHECK(topic_match("sensors/#", "sensors/dev1/temp"));
  CHECK(topic_match("#", "anything/at/all"));
  CHECK_FALSE(topic_match("sensors/+", "sensors"));
  CHECK_FALSE(topic_match("sensors/dev1", "sensors/dev1/temp"));
}

TEST_CASE("filter and name validation") {
  CHECK(valid_topic_name("a/b/c"));
  CHECK_FALSE(valid_topic_name("a/+/c"));
  CHECK_FALSE(valid_topic_name(""));
  CHECK(valid_topic_filter("a/+/c"));
  CHECK(valid_topic_filter("a/#"));
  CHECK_FALSE(valid_topic_filter("a/#/b"));   // # only as last level
  CHECK_FALSE(valid_topic_filter("a/b+/c"));  // wildcards occupy whole levels
  CHECK_FALSE(valid_topic_filter("a/#b"));
}

TEST_CASE("random filters and topics agree with the recursive oracle") {
  Rng rng(808);
  int checked = 0;
  for (int trial = 0; trial < 4000; ++trial) {
    std::string filter = random_topic(rng, true);
    std::string topic = random_topic(rng, false);
    if (!valid_topic_filter(filter) || !valid_topic_name(topic)) continue;
    auto f = split_levels(filter);
    auto t = split_levels(topic);
    CHECK(topic_match(filter, topic) == match_oracle(f, 0, t, 0));
    ++checked;
  }
  CHECK(checked > 1000);
}

TEST_CASE("filter subsumption equals language inclusion on a small alphabet") {
  auto topics = small_topics();
  auto filters = small_filters();
  for (const auto& outer : filters) {
    for (const auto& inner : filters) {
      bool included = true;
      for (const auto& t : topics) {
        if (topic_match(inner, t) && !topic_match(outer, t)) {
          included = false;
          break;
        }
      }
      // On the bounded topic set inclusion must agree with the structural
      // check, except where inner matches deeper-than-3 topics; the
      // structural answer is computed over unbounded depth, so only check
      // agreement when the structural check says yes (soundness) plus
      // spot-check completeness for equal shapes.
      if (filter_subsumes(outer, inner)) {
        CHECK_MESSAGE(included, outer, " should cover ", inner);
      } else if (included) {
        // language inclusion over the bounded set but not structurally:
        // must be a depth artifact, i.e. inner ends in '#' or reaches level 3
        bool depth_artifact = inner.find('#') != std::string::npos ||
                              split_levels(inner).size() == 3;
        CHECK_MESSAGE(depth_artifact, outer, " vs ", inner);
      }
    }
  }
}

TEST_CASE("subsumption soundness on random pairs") {
  Rng rng(909);
  auto survives = [&](const std::string& outer, const std::string& inner) {
    // sample concrete topics from inner's language; each must match outer
    for (int i = 0; i < 200; ++i) {
      auto levels = split_levels(inner);
      std::string concrete;
      for (size_t li = 0; li < levels.size(); ++li) {
        std::string level = levels[li];
        if (level == "+") {
          level = std::string(1, static_cast<char>('a' + rng.uniform(3)));
        } else if (level == "#") {
          size_t extra = rng.uniform(3);
          std::string tail;
          for (size_t e = 0; e < extra; ++e) {
            if (e) tail += "/";
            tail += std::string(1, static_cast<char>('a' + rng.uniform(3)));
          }
          if (tail.empty()) {
            if (concrete.empty()) concrete = "a";  // '#' alone: parent is root
            break;
          }
          level = tail;
        }
        if (li) concrete += "/";
        concrete += level;
      }
      if (concrete.empty() || !valid_topic_name(concrete)) continue;
      if (!topic_match(inner, concrete)) continue;
      if (!topic_match(outer, concrete)) return false;
    }
    return true;
  };

  for (int trial = 0; trial < 500; ++trial) {
    std::string outer = random_topic(rng, true);
    std::string inner = random_topic(rng, true);
    if (!valid_topic_filter(outer) || !valid_topic_filter(inner)) continue;
    if (filter_subsumes(outer, inner)) {
      CHECK_MESSAGE(survives(outer, inner), outer, " =/=> ", inner);
    }
  }
}
