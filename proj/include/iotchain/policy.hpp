// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace iotchain::txflow {

// Boolean expression over organizations: Org(name) | And | Or | OutOf(n, ...).
// Parsed from strings like "AND(Org1,Org2)", "OUTOF(2,Org1,Org2,IoT)" with
// case-insensitive operators and case-sensitive org names; operators nest.
class EndorsementPolicy {
public:
  enum class Kind { org, and_op, or_op, out_of };

  static EndorsementPolicy parse(std::string_view expr);  // throws policy_error

  static EndorsementPolicy org(std::string name);
  static EndorsementPolicy all_of(std::vector<EndorsementPolicy> children);
  static EndorsementPolicy any_of(std::vector<EndorsementPolicy> children);
  static EndorsementPolicy out_of(uint64_t n, std::vector<EndorsementPolicy> children);

  bool satisfied_by(const std::set<std::string>& orgs) const;

  std::string to_string() const;

  Kind kind() const { return kind_; }
  const std::string& org_name() const { return org_; }
  uint64_t threshold() const { return threshold_; }
  const std::vector<EndorsementPolicy>& children() const { return children_; }

private:
  EndorsementPolicy() = default;

  Kind kind_ = Kind::org;
  std::string org_;
  uint64_t threshold_ = 0;
  std::vector<EndorsementPolicy> children_;
};

}  // namespace iotchain::txflow
