// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <stdexcept>
#include <string>

namespace iotchain {

enum class ErrorCode {
  // identity
  duplicate_subject,
  invalid_role,
  unknown_issuer,
  unknown_certificate,
  malformed_key,
  // ledger
  chain_mismatch,
  out_of_order,
  unknown_channel,
  invalid_range,
  not_found,
  // transaction flow
  auth_failure,
  chaincode_error,
  not_member,
  mixed_read_write_sets,
  timeout,
  policy_error,
  // chaincode
  unauthorized,
  malformed_uuid,
  duplicate_device,
  expired,
  already_used,
  bad_signature,
  unknown_subject,
  // broker
  not_authorized,
  quota_exceeded,
  already_connected,
  bad_frame,
  not_connected,
  // tooling
  config_error,
  io_error,
  parse_error,
  usage_error,
  internal,
};

// Stable upper-case token, e.g. "DUPLICATE_SUBJECT". Used in CLI error lines.
const char* error_code_name(ErrorCode code);

// Stable nonzero process exit code per error class, documented in `--help`.
int error_exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace iotchain
