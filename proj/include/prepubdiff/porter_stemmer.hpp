#pragma once

#include <string>
#include <string_view>

namespace prepubdiff::metrics {

/// Porter (1980) suffix stripping as in Martin Porter's reference
/// implementation, including its "bli"->"ble" and "logi"->"log" rules.
/// Expects a lowercase a-z word; words of length <= 2 are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace prepubdiff::metrics
