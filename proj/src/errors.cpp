// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "iotchain/errors.hpp"

namespace iotchain {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::duplicate_subject: return "DUPLICATE_SUBJECT";
    case ErrorCode::invalid_role: return "INVALID_ROLE";
    case ErrorCode::unknown_issuer: return "UNKNOWN_ISSUER";
    case ErrorCode::unknown_certificate: return "UNKNOWN_CERTIFICATE";
    case ErrorCode::malformed_key: return "MALFORMED_KEY";
    case ErrorCode::chain_mismatch: return "CHAIN_MISMATCH";
    case ErrorCode::out_of_order: return "OUT_OF_ORDER";
    case ErrorCode::unknown_channel: return "UNKNOWN_CHANNEL";
    case ErrorCode::invalid_range: return "INVALID_RANGE";
    case ErrorCode::not_found: return "NOT_FOUND";
    case ErrorCode::auth_failure: return "AUTH_FAILURE";
    case ErrorCode::chaincode_error: return "CHAINCODE_ERROR";
    case ErrorCode::not_member: return "NOT_MEMBER";
    case ErrorCode::mixed_read_write_sets: return "MIXED_READ_WRITE_SETS";
    case ErrorCode::timeout: return "TIMEOUT";
    case ErrorCode::policy_error: return "POLICY_ERROR";
    case ErrorCode::unauthorized: return "UNAUTHORIZED";
    case ErrorCode::malformed_uuid: return "MALFORMED_UUID";
    case ErrorCode::duplicate_device: return "DUPLICATE_DEVICE";
    case ErrorCode::expired: return "EXPIRED";
    case ErrorCode::already_used: return "ALREADY_USED";
    case ErrorCode::bad_signature: return "BAD_SIGNATURE";
    case ErrorCode::unknown_subject: return "UNKNOWN_SUBJECT";
    case ErrorCode::not_authorized: return "NOT_AUTHORIZED";
    case ErrorCode::quota_exceeded: return "QUOTA_EXCEEDED";
    case ErrorCode::already_connected: return "ALREADY_CONNECTED";
    case ErrorCode::bad_frame: return "BAD_FRAME";
    case ErrorCode::not_connected: return "NOT_CONNECTED";
    case ErrorCode::config_error: return "CONFIG_ERROR";
    case ErrorCode::io_error: return "IO_ERROR";
    case ErrorCode::parse_error: return "PARSE_ERROR";
    case ErrorCode::usage_error: return "USAGE_ERROR";
    case ErrorCode::internal: return "INTERNAL";
  }
  return "INTERNAL";
}

int error_exit_code(ErrorCode code) {
  // 2..36, in enum declaration order; 1 is reserved for unexpected failures.
  return 2 + static_cast<int>(code);
}

}  // namespace iotchain
