// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/policy.hpp"

#include <cctype>

#include "iotchain/errors.hpp"

namespace iotchain::txflow {

namespace {

struct Parser {
  std::string_view input;
  size_t pos = 0;

  void skip_ws() {
    while (pos < input.size() && std::isspace(static_cast<unsigned char>(input[pos]))) {
      ++pos;
    }
  }

  bool eof() {
    skip_ws();
    return pos >= input.size();
  }

  char peek() {
    skip_ws();
    return pos < input.size() ? input[pos] : '\0';
  }

  void expect(char c) {
    skip_ws();
    if (pos >= input.size() || input[pos] != c) {
      raise(ErrorCode::policy_error,
            "expected '" + std::string(1, c) + "' at offset " + std::to_string(pos) +
                " in policy expression");
    }
    ++pos;
  }

  // Bare token: org name or operator word; stops at '(', ')', ','.
  std::string token() {
    skip_ws();
    size_t start = pos;
    while (pos < input.size() && input[pos] != '(' && input[pos] != ')' &&
           input[pos] != ',' && !std::isspace(static_cast<unsigned char>(input[pos]))) {
      ++pos;
    }
    if (start == pos) {
      raise(ErrorCode::policy_error,
            "empty token at offset " + std::to_string(pos) + " in policy expression");
    }
    return std::string(input.substr(start, pos - start));
  }

  EndorsementPolicy expression() {
    std::string tok = token();
    std::string upper;
    for (char c : tok) upper.push_back(static_cast<char>(std::toupper(c)));

    if (peek() != '(') {
      return EndorsementPolicy::org(tok);  // plain org leaf
    }
    expect('(');

    if (upper == "OUTOF") {
      std::string count = token();
      uint64_t n = 0;
      try {
        n = std::stoull(count);
      } catch (const std::exception&) {
        raise(ErrorCode::policy_error, "OUTOF threshold must be an integer");
      }
      std::vector<EndorsementPolicy> children;
      while (peek() == ',') {
        expect(',');
        children.push_back(expression());
      }
      expect(')');
      return EndorsementPolicy::out_of(n, std::move(children));
    }

    std::vector<EndorsementPolicy> children;
    children.push_back(expression());
    while (peek() == ',') {
      expect(',');
      children.push_back(expression());
    }
    expect(')');

    if (upper == "AND") return EndorsementPolicy::all_of(std::move(children));
    if (upper == "OR") return EndorsementPolicy::any_of(std::move(children));
    raise(ErrorCode::policy_error, "unknown policy operator: " + tok);
  }
};

}  // namespace

EndorsementPolicy EndorsementPolicy::parse(std::string_view expr) {
  Parser p{expr};
  EndorsementPolicy result = p.expression();
  if (!p.eof()) {
    raise(ErrorCode::policy_error, "trailing characters in policy expression");
  }
  return result;
}

EndorsementPolicy EndorsementPolicy::org(std::string name) {
  if (name.empty()) raise(ErrorCode::policy_error, "org name must be non-empty");
  EndorsementPolicy p;
  p.kind_ = Kind::org;
  p.org_ = std::move(name);
  return p;
}

EndorsementPolicy EndorsementPolicy::all_of(std::vector<EndorsementPolicy> children) {
  if (children.empty()) raise(ErrorCode::policy_error, "AND requires children");
  EndorsementPolicy p;
  p.kind_ = Kind::and_op;
  p.children_ = std::move(children);
  return p;
}

EndorsementPolicy EndorsementPolicy::any_of(std::vector<EndorsementPolicy> children) {
  if (children.empty()) raise(ErrorCode::policy_error, "OR requires children");
  EndorsementPolicy p;
  p.kind_ = Kind::or_op;
  p.children_ = std::move(children);
  return p;
}

EndorsementPolicy EndorsementPolicy::out_of(uint64_t n,
                                            std::vector<EndorsementPolicy> children) {
  if (children.empty()) raise(ErrorCode::policy_error, "OUTOF requires children");
  if (n > children.size()) {
    raise(ErrorCode::policy_error,
          "OUTOF threshold exceeds the number of children");
  }
  EndorsementPolicy p;
  p.kind_ = Kind::out_of;
  p.threshold_ = n;
  p.children_ = std::move(children);
  return p;
}

bool EndorsementPolicy::satisfied_by(const std::set<std::string>& orgs) const {
  switch (kind_) {
    case Kind::org:
      return orgs.count(org_) > 0;
    case Kind::and_op: {
      for (const auto& c : children_) {
        if (!c.satisfied_by(orgs)) return false;
      }
      return true;
    }
    case Kind::or_op: {
      for (const auto& c : children_) {
        if (c.satisfied_by(orgs)) return true;
      }
      return false;
    }
    case Kind::out_of: {
      uint64_t hits = 0;
      for (const auto& c : children_) {
        if (c.satisfied_by(orgs)) ++hits;
      }
      return hits >= threshold_;
    }
  }
  return false;
}

std::string EndorsementPolicy::to_string() const {
  switch (kind_) {
    case Kind::org:
      return org_;
    case Kind::and_op:
    case Kind::or_op:
    case Kind::out_of: {
      std::string out = kind_ == Kind::and_op ? "AND(" : kind_ == Kind::or_op ? "OR(" : "OUTOF(";
      if (kind_ == Kind::out_of) out += std::to_string(threshold_);
      bool first = kind_ != Kind::out_of;
      for (const auto& c : children_) {
        if (!first) out += ",";
        first = false;
        out += c.to_string();
      }
      out += ")";
      return out;
    }
  }
  return org_;
}

}  // namespace iotchain::txflow
