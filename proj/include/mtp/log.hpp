#pragma once

#include <functional>
#include <string>

namespace mtp {

using WarningSink = std::function<void(const std::string&)>;

/// Routes library warnings (default: stderr). Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace mtp
