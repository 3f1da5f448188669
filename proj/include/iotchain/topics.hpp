// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace iotchain::broker {

std::vector<std::string> split_levels(std::string_view s);

// Topic names carry no wildcards; filters may use `+` for one level and a
// trailing `#` for the remainder. Wildcards must occupy whole levels.
bool valid_topic_name(std::string_view topic);
bool valid_topic_filter(std::string_view filter);

// MQTT-style matching, including the parent rule: filter "a/#" matches
// topic "a".
bool topic_match(std::string_view filter, std::string_view topic);

// True iff every topic matched by `inner` is also matched by `outer`. Used to
// decide whether a subscribe right on pattern `outer` authorizes filter
// `inner` without widening it.
bool filter_subsumes(std::string_view outer, std::string_view inner);

}  // namespace iotchain::broker
